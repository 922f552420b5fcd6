use std::collections::BTreeMap;

use vnfrep_milp::{MilpModel, Sense, VarId};

use super::placement::{ChainPlacement, Placement};
use super::{binary_value, FormulationError};
use crate::cost::CostFunction;
use crate::paths::Path;
use crate::traffic::VnfSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct RaChain {
    pub id: usize,
    pub vnfs: Vec<VnfSpec>,
    /// Volume of each demand of the chain, in Gbps.
    pub demand_volumes: Vec<f64>,
    /// Candidate paths from the chain's S-NE to its P-NE.
    pub paths: Vec<Path>,
}

#[derive(Debug, Clone)]
pub struct RaInput {
    pub num_nodes: usize,
    pub capacities: Vec<f64>,
    /// Utilization left on each link by the fixed background routing.
    pub background_util: Vec<f64>,
    pub chains: Vec<RaChain>,
    pub cost: CostFunction,
    pub alpha: f64,
    pub beta: f64,
    pub r_max: usize,
    pub w_max: Option<usize>,
    pub max_dc: Option<usize>,
    /// Nodes allowed to host VNFs.
    pub dc_candidates: Vec<bool>,
    /// Order interchangeable demands of a chain by path index.
    pub break_symmetry: bool,
    /// Add `F[n,v,s] <= F[n]` for every placement variable. Valid for every
    /// integer solution; much tighter relaxation than the big-W row alone.
    pub link_rows: bool,
}

impl RaInput {
    pub fn validate(&self) -> Result<(), FormulationError> {
        let nl = self.capacities.len();
        if self.background_util.len() != nl {
            return Err(FormulationError::LinkCount { expected: nl, got: self.background_util.len() });
        }
        if self.dc_candidates.len() != self.num_nodes {
            return Err(FormulationError::LinkCount { expected: self.num_nodes, got: self.dc_candidates.len() });
        }
        for (l, &c) in self.capacities.iter().enumerate() {
            if !(c > 0.0) || !c.is_finite() {
                return Err(FormulationError::Capacity(l));
            }
        }
        for (l, &u) in self.background_util.iter().enumerate() {
            if !(u >= 0.0) || !u.is_finite() {
                return Err(FormulationError::Background(l));
            }
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) || self.alpha + self.beta == 0.0 {
            return Err(FormulationError::Weights);
        }
        if self.w_max == Some(0) {
            return Err(FormulationError::WMax);
        }
        for ch in &self.chains {
            if ch.vnfs.is_empty() {
                return Err(FormulationError::EmptyChain(ch.id));
            }
            if ch.demand_volumes.is_empty() {
                return Err(FormulationError::NoDemands(ch.id));
            }
            if ch.paths.is_empty() {
                return Err(FormulationError::NoChainPath(ch.id));
            }
        }
        Ok(())
    }

    /// Nodes that may host VNFs of chain `c`: candidate nodes on any of its
    /// paths, ascending.
    pub fn host_nodes(&self, c: usize) -> Vec<usize> {
        let mut on_path = vec![false; self.num_nodes];
        for p in &self.chains[c].paths {
            for &n in &p.node_seq {
                on_path[n] = true;
            }
        }
        (0..self.num_nodes).filter(|&n| on_path[n] && self.dc_candidates[n]).collect()
    }

    /// Big constant of the node activation rows.
    pub fn big_w(&self) -> f64 {
        match self.w_max {
            Some(w) => w as f64,
            None => self.chains.iter().map(|c| c.vnfs.len()).sum::<usize>().max(1) as f64,
        }
    }
}

fn inner_replicable(vnfs: &[VnfSpec]) -> impl Iterator<Item = usize> + '_ {
    let last = vnfs.len().saturating_sub(1);
    (1..last).filter(move |&v| vnfs[v].replicable)
}

/// Predicted number of rows in each constraint family of the RA model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaCounts(pub BTreeMap<&'static str, usize>);

impl RaCounts {
    pub fn predict(input: &RaInput) -> Self {
        let s = input.chains.len();
        let hosts: Vec<Vec<usize>> = (0..s).map(|c| input.host_nodes(c)).collect();
        let mut any_host = vec![false; input.num_nodes];
        for h in &hosts {
            for &n in h {
                any_host[n] = true;
            }
        }
        let nf = any_host.iter().filter(|&&b| b).count();
        let sum = |f: &dyn Fn(usize, &RaChain) -> usize| -> usize {
            input.chains.iter().enumerate().map(|(i, c)| f(i, c)).sum()
        };
        let mut m = BTreeMap::new();
        m.insert("cost[", if input.alpha > 0.0 { input.capacities.len() * input.cost.segments().len() } else { 0 });
        m.insert("demands[", s);
        m.insert("route[", sum(&|_, c| c.demand_volumes.len()));
        m.insert("act_lo[", nf);
        m.insert("act_hi[", nf);
        m.insert("use[", sum(&|_, c| c.demand_volumes.len() * c.paths.len()));
        m.insert("active[", sum(&|_, c| c.paths.len()));
        m.insert("paths_lo[", s);
        m.insert("paths_hi[", s);
        m.insert("place[", sum(&|_, c| c.paths.len() * c.vnfs.len()));
        m.insert("order[", sum(&|_, c| c.paths.iter().map(|p| p.node_seq.len()).sum::<usize>() * (c.vnfs.len() - 1)));
        m.insert("wmax[", if input.w_max.is_some() { nf } else { 0 });
        m.insert("replica[", sum(&|_, c| c.vnfs.len()));
        m.insert(
            "excl[",
            sum(&|i, c| {
                let inner = inner_replicable(&c.vnfs).count();
                let mut shared = 0;
                for a in 0..c.paths.len() {
                    for b in a + 1..c.paths.len() {
                        shared += hosts[i]
                            .iter()
                            .filter(|&&n| c.paths[a].contains_node(n) && c.paths[b].contains_node(n))
                            .count();
                    }
                }
                shared * inner
            }),
        );
        m.insert("maxdc", usize::from(input.max_dc.is_some()));
        m.insert("link[", if input.link_rows { sum(&|i, c| hosts[i].len() * c.vnfs.len()) } else { 0 });
        m.insert(
            "sym[",
            if input.break_symmetry {
                sum(&|_, c| c.demand_volumes.windows(2).filter(|w| w[0] == w[1]).count())
            } else {
                0
            },
        );
        Self(m)
    }
}

#[derive(Debug, Clone)]
pub struct RaModel {
    pub model: MilpModel,
    /// Link cost variables; empty when `alpha == 0`.
    pub k: Vec<VarId>,
    /// `rd[c][d][p]`: demand `d` of chain `c` uses path `p`.
    pub rd: Vec<Vec<Vec<VarId>>>,
    /// `rs[c][p]`: chain `c` activates path `p`.
    pub rs: Vec<Vec<VarId>>,
    /// `f[n]`: node `n` hosts at least one VNF.
    pub f: Vec<Option<VarId>>,
    /// `fv[c][v][n]`: VNF `v` of chain `c` runs on node `n`.
    pub fv: Vec<Vec<Vec<Option<VarId>>>>,
}

enum Objective {
    Weighted,
    /// Prefer low-index paths among placements with at most `dc_cap` DCs.
    PathRank { dc_cap: usize },
}

/// Resource-allocation model: route every chain demand on an active path
/// of its chain, place every VNF of the chain on each active path in chain
/// order, and minimize `alpha * sum K_l + beta * sum F_n`.
///
/// `F[n,v,s]` exists only for candidate nodes on the chain's paths; any
/// other node could never satisfy a placement or ordering row.
pub fn build_ra_model(input: &RaInput) -> Result<RaModel, FormulationError> {
    build(input, Objective::Weighted)
}

/// Second stage for node-cost objectives: among placements using at most
/// `dc_cap` data centers, activate the lowest-ranked paths
/// (minimize `sum_s sum_p (p + 1) * R[p,s]`).
pub fn build_ra_tiebreak_model(input: &RaInput, dc_cap: usize) -> Result<RaModel, FormulationError> {
    build(input, Objective::PathRank { dc_cap })
}

fn build(input: &RaInput, objective: Objective) -> Result<RaModel, FormulationError> {
    input.validate()?;
    let nl = input.capacities.len();
    let nn = input.num_nodes;
    let with_k = matches!(objective, Objective::Weighted) && input.alpha > 0.0;
    let mut m = MilpModel::new("ra");
    m.register_symbol("K[l]", "K_l");
    m.register_symbol("R[p,lambda,s]", "R_p^{lambda,s}");
    m.register_symbol("R[p,s]", "R_p^s");
    m.register_symbol("F[n]", "F_n");
    m.register_symbol("F[n,v,s]", "F_n^{v,s}");

    let k = if with_k {
        (0..nl)
            .map(|l| m.add_continuous(format!("K[{l}]"), 0.0, f64::INFINITY))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        Vec::new()
    };
    let mut rd = Vec::new();
    let mut rs = Vec::new();
    for ch in &input.chains {
        let mut per_demand = Vec::new();
        for d in 0..ch.demand_volumes.len() {
            let row = (0..ch.paths.len())
                .map(|p| m.add_binary(format!("R[{p},{d},{}]", ch.id)))
                .collect::<Result<Vec<_>, _>>()?;
            per_demand.push(row);
        }
        rd.push(per_demand);
        let row = (0..ch.paths.len())
            .map(|p| m.add_binary(format!("R[{p},{}]", ch.id)))
            .collect::<Result<Vec<_>, _>>()?;
        rs.push(row);
    }
    let hosts: Vec<Vec<usize>> = (0..input.chains.len()).map(|c| input.host_nodes(c)).collect();
    let mut fv = Vec::new();
    for (c, ch) in input.chains.iter().enumerate() {
        let mut per_vnf = Vec::new();
        for v in 0..ch.vnfs.len() {
            let mut per_node = vec![None; nn];
            for &n in &hosts[c] {
                per_node[n] = Some(m.add_binary(format!("F[{n},{v},{}]", ch.id))?);
            }
            per_vnf.push(per_node);
        }
        fv.push(per_vnf);
    }
    let mut f = vec![None; nn];
    for n in 0..nn {
        if hosts.iter().any(|h| h.contains(&n)) {
            f[n] = Some(m.add_binary(format!("F[{n}]"))?);
        }
    }

    // link cost over superposed utilization
    if with_k {
        let mut util: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); nl];
        for (c, ch) in input.chains.iter().enumerate() {
            for (d, &vol) in ch.demand_volumes.iter().enumerate() {
                for (p, path) in ch.paths.iter().enumerate() {
                    for &l in &path.link_seq {
                        util[l].push((rd[c][d][p], vol / input.capacities[l]));
                    }
                }
            }
        }
        for l in 0..nl {
            for (i, seg) in input.cost.segments().iter().enumerate() {
                let mut terms = vec![(k[l], 1.0)];
                terms.extend(util[l].iter().map(|&(v, u)| (v, -seg.a * u)));
                let rhs = seg.a * input.background_util[l] - seg.b;
                m.add_constraint(format!("cost[{l},{i}]"), &terms, Sense::Ge, rhs)?;
            }
        }
    }

    for (c, ch) in input.chains.iter().enumerate() {
        let s = ch.id;
        let nd = ch.demand_volumes.len();
        let all: Vec<_> = rd[c].iter().flatten().map(|&v| (v, 1.0)).collect();
        m.add_constraint(format!("demands[{s}]"), &all, Sense::Eq, nd as f64)?;
        for d in 0..nd {
            let terms: Vec<_> = rd[c][d].iter().map(|&v| (v, 1.0)).collect();
            m.add_constraint(format!("route[{d},{s}]"), &terms, Sense::Eq, 1.0)?;
        }
        for d in 0..nd {
            for p in 0..ch.paths.len() {
                m.add_constraint(
                    format!("use[{p},{d},{s}]"),
                    &[(rd[c][d][p], 1.0), (rs[c][p], -1.0)],
                    Sense::Le,
                    0.0,
                )?;
            }
        }
        for p in 0..ch.paths.len() {
            let mut terms = vec![(rs[c][p], 1.0)];
            terms.extend((0..nd).map(|d| (rd[c][d][p], -1.0)));
            m.add_constraint(format!("active[{p},{s}]"), &terms, Sense::Le, 0.0)?;
        }
        let active: Vec<_> = rs[c].iter().map(|&v| (v, 1.0)).collect();
        m.add_constraint(format!("paths_lo[{s}]"), &active, Sense::Ge, 1.0)?;
        m.add_constraint(format!("paths_hi[{s}]"), &active, Sense::Le, (input.r_max + 1) as f64)?;
        for (p, path) in ch.paths.iter().enumerate() {
            for v in 0..ch.vnfs.len() {
                let mut terms = vec![(rs[c][p], 1.0)];
                terms.extend(path.node_seq.iter().filter_map(|&n| fv[c][v][n]).map(|x| (x, -1.0)));
                m.add_constraint(format!("place[{p},{v},{s}]"), &terms, Sense::Le, 0.0)?;
            }
        }
        for (p, path) in ch.paths.iter().enumerate() {
            for v in 1..ch.vnfs.len() {
                for (pos, &n) in path.node_seq.iter().enumerate() {
                    let mut terms: Vec<(VarId, f64)> = path.node_seq[..=pos]
                        .iter()
                        .filter_map(|&mm| fv[c][v - 1][mm])
                        .map(|x| (x, 1.0))
                        .collect();
                    if let Some(x) = fv[c][v][n] {
                        terms.push((x, -1.0));
                    }
                    terms.push((rs[c][p], -1.0));
                    m.add_constraint(format!("order[{p},{n},{v},{s}]"), &terms, Sense::Ge, -1.0)?;
                }
            }
        }
        for (v, spec) in ch.vnfs.iter().enumerate() {
            let r = if spec.replicable { 1.0 } else { 0.0 };
            let mut terms: Vec<_> = fv[c][v].iter().flatten().map(|&x| (x, 1.0)).collect();
            if spec.replicable {
                terms.extend(rs[c].iter().map(|&x| (x, -r)));
            }
            m.add_constraint(format!("replica[{v},{s}]"), &terms, Sense::Le, 1.0 - r)?;
        }
        for p1 in 0..ch.paths.len() {
            for p2 in p1 + 1..ch.paths.len() {
                for &n in &hosts[c] {
                    if !(ch.paths[p1].contains_node(n) && ch.paths[p2].contains_node(n)) {
                        continue;
                    }
                    for v in inner_replicable(&ch.vnfs) {
                        let x = fv[c][v][n].expect("host node has a placement variable");
                        m.add_constraint(
                            format!("excl[{p1},{p2},{n},{v},{s}]"),
                            &[(rs[c][p1], 1.0), (rs[c][p2], 1.0), (x, 2.0)],
                            Sense::Le,
                            3.0,
                        )?;
                    }
                }
            }
        }
        if input.break_symmetry {
            for d in 1..nd {
                if ch.demand_volumes[d] != ch.demand_volumes[d - 1] {
                    continue;
                }
                let mut terms: Vec<_> = (0..ch.paths.len()).map(|p| (rd[c][d][p], p as f64)).collect();
                terms.extend((0..ch.paths.len()).map(|p| (rd[c][d - 1][p], -(p as f64))));
                m.add_constraint(format!("sym[{d},{s}]"), &terms, Sense::Ge, 0.0)?;
            }
        }
    }

    let big_w = input.big_w();
    for n in 0..nn {
        let Some(fn_) = f[n] else { continue };
        let placed: Vec<(VarId, f64)> = fv.iter().flatten().filter_map(|per_node| per_node[n]).map(|x| (x, 1.0)).collect();
        let mut lo = placed.clone();
        lo.push((fn_, -big_w));
        m.add_constraint(format!("act_lo[{n}]"), &lo, Sense::Le, 0.0)?;
        let mut hi: Vec<_> = placed.iter().map(|&(x, _)| (x, -1.0)).collect();
        hi.push((fn_, 1.0));
        m.add_constraint(format!("act_hi[{n}]"), &hi, Sense::Le, 0.0)?;
        if let Some(w) = input.w_max {
            m.add_constraint(format!("wmax[{n}]"), &placed, Sense::Le, w as f64)?;
        }
        if input.link_rows {
            for (c, per_vnf) in fv.iter().enumerate() {
                for (v, per_node) in per_vnf.iter().enumerate() {
                    if let Some(x) = per_node[n] {
                        let s = input.chains[c].id;
                        m.add_constraint(format!("link[{n},{v},{s}]"), &[(x, 1.0), (fn_, -1.0)], Sense::Le, 0.0)?;
                    }
                }
            }
        }
    }
    let used: Vec<_> = f.iter().flatten().map(|&x| (x, 1.0)).collect();
    let cap = match objective {
        Objective::Weighted => input.max_dc,
        Objective::PathRank { dc_cap } => Some(input.max_dc.map_or(dc_cap, |d| d.min(dc_cap))),
    };
    if let Some(d) = cap {
        m.add_constraint("maxdc", &used, Sense::Le, d as f64)?;
    }

    let obj: Vec<(VarId, f64)> = match objective {
        Objective::Weighted => {
            let mut obj: Vec<_> = k.iter().map(|&x| (x, input.alpha)).collect();
            if input.beta > 0.0 {
                obj.extend(used.iter().map(|&(x, _)| (x, input.beta)));
            }
            obj
        }
        Objective::PathRank { .. } => rs
            .iter()
            .flat_map(|row| row.iter().enumerate().map(|(p, &x)| (x, (p + 1) as f64)))
            .collect(),
    };
    m.set_objective(&obj)?;
    Ok(RaModel { model: m, k, rd, rs, f, fv })
}

/// Encodes `pl` as a value vector for `ra`, with each `K_l` on the cost
/// envelope. Decisions that have no variable in the model are dropped, so
/// the result is only feasible if `pl` is.
pub fn placement_values(ra: &RaModel, input: &RaInput, pl: &Placement) -> Vec<f64> {
    let mut values = vec![0.0; ra.model.num_vars()];
    for (c, cp) in pl.chains.iter().enumerate().take(ra.rs.len()) {
        for &p in &cp.active_paths {
            if let Some(x) = ra.rs[c].get(p) {
                values[x.0] = 1.0;
            }
        }
        for (d, &p) in cp.demand_paths.iter().enumerate() {
            if let Some(x) = ra.rd[c].get(d).and_then(|row| row.get(p)) {
                values[x.0] = 1.0;
            }
        }
        for (v, hosts) in cp.hosts.iter().enumerate() {
            for &n in hosts {
                if let Some(Some(x)) = ra.fv[c].get(v).and_then(|row| row.get(n)) {
                    values[x.0] = 1.0;
                }
            }
        }
    }
    for &n in &pl.used_nodes {
        if let Some(Some(x)) = ra.f.get(n) {
            values[x.0] = 1.0;
        }
    }
    if !ra.k.is_empty() {
        let load = super::placement::ra_link_loads(input, pl);
        for (l, &x) in ra.k.iter().enumerate() {
            values[x.0] = input.cost.envelope(input.background_util[l] + load[l] / input.capacities[l]);
        }
    }
    values
}

/// Reads routing and placement decisions out of a solved RA model.
pub fn extract_placement(ra: &RaModel, values: &[f64]) -> Result<Placement, FormulationError> {
    let model = &ra.model;
    if values.len() != model.num_vars() {
        return Err(FormulationError::ValueCount { expected: model.num_vars(), got: values.len() });
    }
    let bit = |x: VarId| binary_value(model, x, values);
    let mut chains = Vec::new();
    for c in 0..ra.rs.len() {
        let mut active_paths = Vec::new();
        for (p, &x) in ra.rs[c].iter().enumerate() {
            if bit(x)? {
                active_paths.push(p);
            }
        }
        let mut demand_paths = Vec::new();
        for row in &ra.rd[c] {
            let mut chosen = None;
            for (p, &x) in row.iter().enumerate() {
                if bit(x)? && chosen.is_none() {
                    chosen = Some(p);
                }
            }
            demand_paths.push(chosen.unwrap_or(usize::MAX));
        }
        let mut hosts = Vec::new();
        for per_node in &ra.fv[c] {
            let mut h = Vec::new();
            for (n, x) in per_node.iter().enumerate() {
                if let Some(x) = *x {
                    if bit(x)? {
                        h.push(n);
                    }
                }
            }
            hosts.push(h);
        }
        chains.push(ChainPlacement { active_paths, demand_paths, hosts });
    }
    let mut used_nodes = Vec::new();
    for (n, x) in ra.f.iter().enumerate() {
        if let Some(x) = *x {
            if bit(x)? {
                used_nodes.push(n);
            }
        }
    }
    Ok(Placement { chains, used_nodes })
}
