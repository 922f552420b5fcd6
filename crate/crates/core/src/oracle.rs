//! Exhaustive optimizers for tiny instances.
//!
//! Everything here is evaluated from the instance data directly: the RA
//! rules are restated over explicit node sets and never consult the MILP
//! builders or their checker.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::formulations::{RaInput, TeInput};

/// Largest TE routing space enumerated.
pub const TE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{0} combinations exceed the enumeration budget of {1}")]
    Budget(u64, u64),
    #[error("instance outside oracle limits: {0}")]
    Limits(String),
    #[error("demand {0} has no candidate path")]
    NoPath(usize),
}

/// Decisions of one chain as seen by the oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaChoice {
    pub active: Vec<usize>,
    pub demand_path: Vec<usize>,
    pub hosts: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decisions {
    /// Path index per demand.
    Te(Vec<usize>),
    Ra(Vec<RaChoice>),
    /// No feasible assignment exists.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `f64::INFINITY` when nothing is feasible.
    pub objective: f64,
    /// Position of the optimum in enumeration order.
    pub index: u64,
    pub decisions: Decisions,
    /// Leaves of the enumeration tree, counting pruned subtrees in full.
    pub explored: u64,
}

/// Tries every single-path routing of the background demands.
pub fn oracle_te(input: &TeInput) -> Result<OracleResult, OracleError> {
    let radix: Vec<usize> = input.demands.iter().map(|d| d.paths.len()).collect();
    if let Some(d) = input.demands.iter().find(|d| d.paths.is_empty()) {
        return Err(OracleError::NoPath(d.id));
    }
    let mut total: u64 = 1;
    for &r in &radix {
        total = total.saturating_mul(r as u64);
        if total > TE_BUDGET {
            return Err(OracleError::Budget(total, TE_BUDGET));
        }
    }
    let nl = input.capacities.len();
    let mut choice = vec![0usize; radix.len()];
    let mut best = (f64::INFINITY, 0u64, choice.clone());
    for index in 0..total {
        let mut load = vec![0.0; nl];
        for (d, &p) in input.demands.iter().zip(&choice) {
            for &l in &d.paths[p].link_seq {
                load[l] += d.volume;
            }
        }
        let cost: f64 = (0..nl).map(|l| input.cost.envelope(load[l] / input.capacities[l])).sum();
        if cost < best.0 {
            best = (cost, index, choice.clone());
        }
        // odometer, last demand fastest
        for d in (0..choice.len()).rev() {
            choice[d] += 1;
            if choice[d] < radix[d] {
                break;
            }
            choice[d] = 0;
        }
    }
    Ok(OracleResult { objective: best.0, index: best.1, decisions: Decisions::Te(best.2), explored: total })
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let mut r = 1u64;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

fn subsets_up_to(items: &[usize], max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let n = items.len();
    for mask in 1u64..(1u64 << n) {
        if (mask.count_ones() as usize) <= max_size {
            out.push((0..n).filter(|i| mask >> i & 1 == 1).map(|i| items[i]).collect());
        }
    }
    out
}

/// Per-chain view used by the RA enumeration.
struct ChainView<'a> {
    input: &'a RaInput,
    c: usize,
}

impl ChainView<'_> {
    fn path(&self, p: usize) -> &[usize] {
        &self.input.chains[self.c].paths[p].node_seq
    }

    fn hostable(&self, active: &[usize]) -> Vec<usize> {
        let mut nodes: Vec<usize> = active.iter().flat_map(|&p| self.path(p).iter().copied()).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes.retain(|&n| self.input.dc_candidates[n]);
        nodes
    }

    /// Rules that involve VNF `v` and, for ordering, VNF `v - 1`, plus the
    /// per-node bound over the VNFs chosen so far.
    fn level_ok(&self, active: &[usize], chosen: &[Vec<usize>], v: usize) -> bool {
        if !level_rules(self, active, chosen, v) {
            return false;
        }
        if let Some(w) = self.input.w_max {
            let mut per_node: HashMap<usize, usize> = HashMap::new();
            for set in &chosen[..=v] {
                for &n in set {
                    *per_node.entry(n).or_default() += 1;
                }
            }
            if per_node.values().any(|&k| k > w) {
                return false;
            }
        }
        true
    }
}

struct HostSearch<'a> {
    view: ChainView<'a>,
    active: Vec<usize>,
    domain: Vec<Vec<usize>>,
    chosen: Vec<Vec<usize>>,
    leaves: u64,
    found: Vec<Vec<Vec<usize>>>,
}

impl HostSearch<'_> {
    fn run(&mut self, v: usize) {
        let depth = self.chosen.len();
        if v == depth {
            self.leaves += 1;
            self.found.push(self.chosen.clone());
            return;
        }
        for i in 0..self.domain.len() {
            self.chosen[v] = self.domain[i].clone();
            if self.view.level_ok(&self.active, &self.chosen, v) {
                self.run(v + 1);
            } else {
                self.leaves += (self.domain.len() as u64).pow((depth - v - 1) as u32);
            }
        }
        self.chosen[v].clear();
    }
}

#[derive(Clone)]
struct Outcome {
    loads: Vec<f64>,
    counts: Vec<usize>,
    choice: RaChoice,
}

/// Leaves the RA enumeration visits for chain `c`:
/// `sum_A |A|^|demands| * (sum_{k=1..|A|} C(h_A, k))^|VNFs|` over active
/// sets `A` of at most `r_max + 1` paths, `h_A` the candidate nodes on `A`.
pub fn predicted_ra_leaves(input: &RaInput, c: usize) -> u64 {
    let ch = &input.chains[c];
    let view = ChainView { input, c };
    let mut total = 0u64;
    for mask in 1u64..(1 << ch.paths.len()) {
        let active: Vec<usize> = (0..ch.paths.len()).filter(|p| mask >> p & 1 == 1).collect();
        if active.len() > input.r_max + 1 {
            continue;
        }
        let h = view.hostable(&active).len() as u64;
        let a = active.len() as u64;
        let per_vnf: u64 = (1..=a).map(|k| binomial(h, k)).sum();
        total += a.pow(ch.demand_volumes.len() as u32) * per_vnf.pow(ch.vnfs.len() as u32);
    }
    total
}

fn check_limits(input: &RaInput) -> Result<(), OracleError> {
    let lim = |msg: String| Err(OracleError::Limits(msg));
    if input.chains.len() > 2 {
        return lim(format!("{} chains (max 2)", input.chains.len()));
    }
    for ch in &input.chains {
        if ch.paths.len() > 3 {
            return lim(format!("chain {} has {} paths (max 3)", ch.id, ch.paths.len()));
        }
        if ch.vnfs.len() > 4 {
            return lim(format!("chain {} has {} VNFs (max 4)", ch.id, ch.vnfs.len()));
        }
        if ch.demand_volumes.len() > 3 {
            return lim(format!("chain {} has {} demands (max 3)", ch.id, ch.demand_volumes.len()));
        }
        if let Some(p) = ch.paths.iter().find(|p| p.node_seq.len() > 5) {
            return lim(format!("chain {} has a path of {} nodes (max 5)", ch.id, p.node_seq.len()));
        }
    }
    Ok(())
}

fn chain_outcomes(input: &RaInput, c: usize) -> (Vec<Outcome>, u64) {
    let ch = &input.chains[c];
    let nd = ch.demand_volumes.len();
    let nl = input.capacities.len();
    let mut leaves = 0u64;
    let mut outcomes = Vec::new();
    let mut seen: HashMap<(Vec<i64>, Vec<usize>), ()> = HashMap::new();
    for mask in 1u64..(1 << ch.paths.len()) {
        let active: Vec<usize> = (0..ch.paths.len()).filter(|p| mask >> p & 1 == 1).collect();
        if active.len() > input.r_max + 1 {
            continue;
        }
        let view = ChainView { input, c };
        let hostable = view.hostable(&active);
        let domain = subsets_up_to(&hostable, active.len());
        let mut search = HostSearch {
            view,
            active: active.clone(),
            domain,
            chosen: vec![Vec::new(); ch.vnfs.len()],
            leaves: 0,
            found: Vec::new(),
        };
        search.run(0);

        // demand maps onto the active paths; every active path must carry one
        let a = active.len();
        let n_maps = (a as u64).pow(nd as u32);
        leaves += n_maps * search.leaves;
        let mut map = vec![0usize; nd];
        for _ in 0..n_maps {
            let covers = (0..a).all(|i| map.contains(&i));
            if covers {
                let demand_path: Vec<usize> = map.iter().map(|&i| active[i]).collect();
                let mut loads = vec![0.0; nl];
                for (d, &p) in demand_path.iter().enumerate() {
                    for &l in &ch.paths[p].link_seq {
                        loads[l] += ch.demand_volumes[d];
                    }
                }
                for hosts in &search.found {
                    let mut counts = vec![0usize; input.num_nodes];
                    for set in hosts {
                        for &n in set {
                            counts[n] += 1;
                        }
                    }
                    let key_loads = if input.alpha > 0.0 {
                        loads.iter().map(|x| (x * 1e9).round() as i64).collect()
                    } else {
                        Vec::new()
                    };
                    let key_counts = if input.w_max.is_some() {
                        counts.clone()
                    } else {
                        counts.iter().map(|&k| usize::from(k > 0)).collect()
                    };
                    let key = (key_loads, key_counts);
                    if seen.contains_key(&key) {
                        continue;
                    }
                    seen.insert(key, ());
                    outcomes.push(Outcome {
                        loads: loads.clone(),
                        counts,
                        choice: RaChoice { active: active.clone(), demand_path: demand_path.clone(), hosts: hosts.clone() },
                    });
                }
            }
            for d in (0..nd).rev() {
                map[d] += 1;
                if map[d] < a {
                    break;
                }
                map[d] = 0;
            }
        }
    }
    (outcomes, leaves)
}

/// Enumerates active path subsets, demand-to-path maps and VNF host sets
/// for every chain, then every cross-chain combination.
pub fn oracle_ra(input: &RaInput) -> Result<OracleResult, OracleError> {
    check_limits(input)?;
    let nl = input.capacities.len();
    let mut per_chain = Vec::new();
    let mut explored = 0u64;
    for c in 0..input.chains.len() {
        let (o, leaves) = chain_outcomes(input, c);
        explored += leaves;
        per_chain.push(o);
    }
    let mut best: (f64, u64, Option<Vec<RaChoice>>) = (f64::INFINITY, 0, None);
    if per_chain.iter().all(|o| !o.is_empty()) {
        let radix: Vec<usize> = per_chain.iter().map(Vec::len).collect();
        let total: u64 = radix.iter().map(|&r| r as u64).product();
        let mut pick = vec![0usize; radix.len()];
        for index in 0..total {
            let mut counts = vec![0usize; input.num_nodes];
            let mut load = vec![0.0; nl];
            for (c, &i) in pick.iter().enumerate() {
                let o = &per_chain[c][i];
                for n in 0..input.num_nodes {
                    counts[n] += o.counts[n];
                }
                for l in 0..nl {
                    load[l] += o.loads[l];
                }
            }
            let used = counts.iter().filter(|&&k| k > 0).count();
            let ok = input.w_max.is_none_or(|w| counts.iter().all(|&k| k <= w))
                && input.max_dc.is_none_or(|d| used <= d);
            if ok {
                let lb: f64 = if input.alpha > 0.0 {
                    (0..nl)
                        .map(|l| input.cost.envelope(input.background_util[l] + load[l] / input.capacities[l]))
                        .sum()
                } else {
                    0.0
                };
                let obj = input.alpha * lb + input.beta * used as f64;
                if obj < best.0 {
                    let choices = pick.iter().enumerate().map(|(c, &i)| per_chain[c][i].choice.clone()).collect();
                    best = (obj, index, Some(choices));
                }
            }
            for c in (0..pick.len()).rev() {
                pick[c] += 1;
                if pick[c] < radix[c] {
                    break;
                }
                pick[c] = 0;
            }
        }
    }
    Ok(OracleResult {
        objective: best.0,
        index: best.1,
        decisions: best.2.map_or(Decisions::None, Decisions::Ra),
        explored,
    })
}

/// The oracle's own feasibility test for a full assignment.
pub fn ra_feasible(input: &RaInput, choices: &[RaChoice]) -> bool {
    if choices.len() != input.chains.len() {
        return false;
    }
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for (c, ch) in choices.iter().enumerate() {
        let spec = &input.chains[c];
        let view = ChainView { input, c };
        let np = spec.paths.len();
        let mut act = ch.active.clone();
        act.sort_unstable();
        act.dedup();
        if act.len() != ch.active.len() || act.is_empty() || act.len() > input.r_max + 1 || act.iter().any(|&p| p >= np) {
            return false;
        }
        if ch.demand_path.len() != spec.demand_volumes.len() || ch.hosts.len() != spec.vnfs.len() {
            return false;
        }
        if ch.demand_path.iter().any(|p| !act.contains(p)) || act.iter().any(|p| !ch.demand_path.contains(p)) {
            return false;
        }
        // hosts must be distinct candidate nodes on some candidate path
        for set in &ch.hosts {
            let mut s = set.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != set.len() {
                return false;
            }
            for &n in set {
                let on_some = spec.paths.iter().any(|p| p.node_seq.contains(&n));
                if n >= input.num_nodes || !input.dc_candidates[n] || !on_some {
                    return false;
                }
                *counts.entry(n).or_default() += 1;
            }
        }
        for v in 0..ch.hosts.len() {
            if !level_rules(&view, &act, &ch.hosts, v) {
                return false;
            }
        }
    }
    if let Some(w) = input.w_max {
        if counts.values().any(|&k| k > w) {
            return false;
        }
    }
    if let Some(d) = input.max_dc {
        if counts.len() > d {
            return false;
        }
    }
    true
}

/// Placement, instance count, ordering and shared-node rules for VNF `v`.
fn level_rules(view: &ChainView<'_>, active: &[usize], chosen: &[Vec<usize>], v: usize) -> bool {
    let spec = &view.input.chains[view.c].vnfs;
    let s = &chosen[v];
    if s.is_empty() || s.len() > active.len() || (!spec[v].replicable && s.len() != 1) {
        return false;
    }
    for &p in active {
        let nodes = view.path(p);
        if !nodes.iter().any(|n| s.contains(n)) {
            return false;
        }
        if v > 0 {
            let mut seen_prev = false;
            for n in nodes {
                seen_prev |= chosen[v - 1].contains(n);
                if s.contains(n) && !seen_prev {
                    return false;
                }
            }
        }
    }
    if v > 0 && v + 1 < spec.len() && spec[v].replicable {
        for &n in s {
            if active.iter().filter(|&&p| view.path(p).contains(&n)).count() >= 2 {
                return false;
            }
        }
    }
    true
}

/// Objective of a full assignment, computed from scratch.
pub fn ra_assignment_objective(input: &RaInput, choices: &[RaChoice]) -> f64 {
    let nl = input.capacities.len();
    let mut load = vec![0.0; nl];
    let mut used = std::collections::BTreeSet::new();
    for (c, ch) in choices.iter().enumerate() {
        let spec = &input.chains[c];
        for (d, &p) in ch.demand_path.iter().enumerate() {
            for &l in &spec.paths[p].link_seq {
                load[l] += spec.demand_volumes[d];
            }
        }
        for set in &ch.hosts {
            used.extend(set.iter().copied());
        }
    }
    let lb: f64 = if input.alpha > 0.0 {
        (0..nl)
            .map(|l| input.cost.envelope(input.background_util[l] + load[l] / input.capacities[l]))
            .sum()
    } else {
        0.0
    };
    input.alpha * lb + input.beta * used.len() as f64
}
