use vnfrep_milp::{MilpModel, Sense, VarId};

use super::{binary_value, FormulationError};
use crate::cost::CostFunction;
use crate::paths::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedDemand {
    pub id: usize,
    pub volume: f64,
    pub paths: Vec<Path>,
}

#[derive(Debug, Clone)]
pub struct TeInput {
    pub capacities: Vec<f64>,
    pub demands: Vec<RoutedDemand>,
    pub cost: CostFunction,
}

#[derive(Debug, Clone)]
pub struct TeModel {
    pub model: MilpModel,
    /// Cost variable of every link.
    pub k: Vec<VarId>,
    /// `r[d][p]`: demand `d` (index into the input) uses its path `p`.
    pub r: Vec<Vec<VarId>>,
}

/// Single-path routing minimizing the summed piecewise-linear link cost.
///
/// Rows: `cost[l,i]` for every link and segment, `route[d]` per demand.
pub fn build_te_model(input: &TeInput) -> Result<TeModel, FormulationError> {
    for (l, &c) in input.capacities.iter().enumerate() {
        if !(c > 0.0) || !c.is_finite() {
            return Err(FormulationError::Capacity(l));
        }
    }
    let num_links = input.capacities.len();
    let mut m = MilpModel::new("te");
    m.register_symbol("K[l]", "K_l");
    m.register_symbol("R[p,lambda]", "R_p^lambda");
    let k = (0..num_links)
        .map(|l| m.add_continuous(format!("K[{l}]"), 0.0, f64::INFINITY))
        .collect::<Result<Vec<_>, _>>()?;
    let mut r = Vec::with_capacity(input.demands.len());
    for d in &input.demands {
        if d.paths.is_empty() {
            return Err(FormulationError::NoPath(d.id));
        }
        let row = (0..d.paths.len())
            .map(|p| m.add_binary(format!("R[{p},{}]", d.id)))
            .collect::<Result<Vec<_>, _>>()?;
        r.push(row);
    }
    // utilization of link l as terms over R
    let mut util: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); num_links];
    for (d, vars) in input.demands.iter().zip(&r) {
        for (p, &var) in d.paths.iter().zip(vars) {
            for &l in &p.link_seq {
                util[l].push((var, d.volume / input.capacities[l]));
            }
        }
    }
    for l in 0..num_links {
        for (i, seg) in input.cost.segments().iter().enumerate() {
            let mut terms = vec![(k[l], 1.0)];
            terms.extend(util[l].iter().map(|&(v, u)| (v, -seg.a * u)));
            m.add_constraint(format!("cost[{l},{i}]"), &terms, Sense::Ge, -seg.b)?;
        }
    }
    for (d, vars) in input.demands.iter().zip(&r) {
        let terms: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
        m.add_constraint(format!("route[{}]", d.id), &terms, Sense::Eq, 1.0)?;
    }
    let obj: Vec<_> = k.iter().map(|&v| (v, 1.0)).collect();
    m.set_objective(&obj)?;
    Ok(TeModel { model: m, k, r })
}

/// Path index chosen by every demand.
pub fn extract_routing(te: &TeModel, values: &[f64]) -> Result<Vec<usize>, FormulationError> {
    if values.len() != te.model.num_vars() {
        return Err(FormulationError::ValueCount { expected: te.model.num_vars(), got: values.len() });
    }
    let mut out = Vec::with_capacity(te.r.len());
    for vars in &te.r {
        let mut chosen = None;
        for (p, &v) in vars.iter().enumerate() {
            if binary_value(&te.model, v, values)? && chosen.is_none() {
                chosen = Some(p);
            }
        }
        out.push(chosen.unwrap_or(0));
    }
    Ok(out)
}

/// Gbps carried by each link when demand `d` uses path `choice[d]`.
pub fn link_loads(num_links: usize, demands: &[RoutedDemand], choice: &[usize]) -> Vec<f64> {
    let mut loads = vec![0.0; num_links];
    for (d, &p) in demands.iter().zip(choice) {
        for &l in &d.paths[p].link_seq {
            loads[l] += d.volume;
        }
    }
    loads
}

/// Summed link cost of a routing, computed directly from the envelope.
pub fn te_objective(input: &TeInput, choice: &[usize]) -> f64 {
    link_loads(input.capacities.len(), &input.demands, choice)
        .iter()
        .zip(&input.capacities)
        .map(|(load, cap)| input.cost.envelope(load / cap))
        .sum()
}
