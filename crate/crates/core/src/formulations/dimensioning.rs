use vnfrep_milp::{MilpModel, Sense, VarId};

use super::{binary_value, FormulationError};
use crate::paths::Path;
use crate::topology::CapacityTypeSet;

#[derive(Debug, Clone, PartialEq)]
pub struct DimDemand {
    pub id: usize,
    pub volume: f64,
    pub paths: Vec<Path>,
}

#[derive(Debug, Clone)]
pub struct DimensioningInput {
    pub num_links: usize,
    pub demands: Vec<DimDemand>,
    pub types: CapacityTypeSet,
    /// Fraction of a link's capacity that traffic may fill.
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct DimensioningModel {
    pub model: MilpModel,
    /// `c[l][t]`: link `l` gets capacity type `t`.
    pub c: Vec<Vec<VarId>>,
    /// `r[d][p]`: demand `d` (index into the input) uses its path `p`.
    pub r: Vec<Vec<VarId>>,
}

/// Chooses one capacity type per link and one path per demand so that each
/// link's load stays within `theta` times its capacity, minimizing total
/// provisioned bandwidth.
///
/// Rows: `cap[l]` (one per link), `onetype[l]` (one per link), `route[d]`
/// (one per demand).
pub fn build_dimensioning_model(input: &DimensioningInput) -> Result<DimensioningModel, FormulationError> {
    if !(input.theta > 0.0 && input.theta <= 1.0) {
        return Err(FormulationError::Theta(input.theta));
    }
    let limit = input.theta * input.types.largest();
    for d in &input.demands {
        if d.paths.is_empty() {
            return Err(FormulationError::NoPath(d.id));
        }
        if d.volume > limit {
            return Err(FormulationError::DemandTooLarge { demand: d.id, volume: d.volume });
        }
    }
    let mut m = MilpModel::new("dimensioning");
    m.register_symbol("C[t,l]", "C_t^l");
    m.register_symbol("R[p,lambda]", "R_p^lambda");
    let types = input.types.as_slice();
    let mut c = Vec::with_capacity(input.num_links);
    for l in 0..input.num_links {
        let row = (0..types.len())
            .map(|t| m.add_binary(format!("C[{t},{l}]")))
            .collect::<Result<Vec<_>, _>>()?;
        c.push(row);
    }
    let mut r = Vec::with_capacity(input.demands.len());
    for d in &input.demands {
        let row = (0..d.paths.len())
            .map(|p| m.add_binary(format!("R[{p},{}]", d.id)))
            .collect::<Result<Vec<_>, _>>()?;
        r.push(row);
    }
    let mut load_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); input.num_links];
    for (d, vars) in input.demands.iter().zip(&r) {
        for (p, &var) in d.paths.iter().zip(vars) {
            for &l in &p.link_seq {
                load_terms[l].push((var, d.volume));
            }
        }
    }
    for (l, mut terms) in load_terms.into_iter().enumerate() {
        for (t, &bw) in types.iter().enumerate() {
            terms.push((c[l][t], -input.theta * bw));
        }
        m.add_constraint(format!("cap[{l}]"), &terms, Sense::Le, 0.0)?;
    }
    for (l, vars) in c.iter().enumerate() {
        let terms: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
        m.add_constraint(format!("onetype[{l}]"), &terms, Sense::Eq, 1.0)?;
    }
    for (d, vars) in input.demands.iter().zip(&r) {
        let terms: Vec<_> = vars.iter().map(|&v| (v, 1.0)).collect();
        m.add_constraint(format!("route[{}]", d.id), &terms, Sense::Eq, 1.0)?;
    }
    let obj: Vec<_> = c
        .iter()
        .flat_map(|vars| vars.iter().zip(types).map(|(&v, &bw)| (v, bw)))
        .collect();
    m.set_objective(&obj)?;
    Ok(DimensioningModel { model: m, c, r })
}

impl DimensioningModel {
    /// Path index chosen for each demand.
    pub fn routing(&self, values: &[f64]) -> Result<Vec<usize>, FormulationError> {
        if values.len() != self.model.num_vars() {
            return Err(FormulationError::ValueCount { expected: self.model.num_vars(), got: values.len() });
        }
        let mut out = Vec::with_capacity(self.r.len());
        for vars in &self.r {
            let mut chosen = None;
            for (p, &v) in vars.iter().enumerate() {
                if binary_value(&self.model, v, values)? && chosen.is_none() {
                    chosen = Some(p);
                }
            }
            out.push(chosen.unwrap_or(0));
        }
        Ok(out)
    }
}

/// Smallest capacity type carrying each link's load within `theta`. Links
/// whose load exceeds every type get the largest one.
pub fn capacities_for_loads(loads: &[f64], types: &CapacityTypeSet, theta: f64) -> Vec<f64> {
    loads
        .iter()
        .map(|&load| {
            types
                .as_slice()
                .iter()
                .copied()
                .find(|&t| load <= theta * t * (1.0 + 1e-12))
                .unwrap_or(types.largest())
        })
        .collect()
}

/// Provisioned bandwidth for `load`; loads above the largest type pay a
/// steep penalty per excess Gbps so rerouting can repair them.
fn penalized(load: f64, types: &CapacityTypeSet, theta: f64) -> f64 {
    match types.as_slice().iter().copied().find(|&t| load <= theta * t * (1.0 + 1e-12)) {
        Some(t) => t,
        None => types.largest() + 1e4 * (load - theta * types.largest()),
    }
}

/// Greedy routing for a starting point: demands in decreasing volume take
/// the path that raises provisioned bandwidth least (ties: fewer hops, then
/// lower index), then demands are rerouted one at a time while that helps.
/// `None` if some link still exceeds the largest type.
pub fn greedy_routing(input: &DimensioningInput) -> Option<Vec<usize>> {
    let (types, theta) = (&input.types, input.theta);
    let cost_of = |loads: &[f64], d: &DimDemand, p: usize| -> f64 {
        d.paths[p]
            .link_seq
            .iter()
            .map(|&l| penalized(loads[l] + d.volume, types, theta) - penalized(loads[l], types, theta))
            .sum()
    };
    let best = |loads: &[f64], d: &DimDemand| -> usize {
        (0..d.paths.len())
            .min_by(|&p, &q| {
                let kp = (cost_of(loads, d, p), d.paths[p].hops(), p);
                let kq = (cost_of(loads, d, q), d.paths[q].hops(), q);
                kp.partial_cmp(&kq).expect("finite costs")
            })
            .expect("demands have paths")
    };
    let add = |loads: &mut [f64], d: &DimDemand, p: usize, sign: f64| {
        for &l in &d.paths[p].link_seq {
            loads[l] += sign * d.volume;
        }
    };
    let mut order: Vec<usize> = (0..input.demands.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&input.demands[a], &input.demands[b]);
        db.volume.partial_cmp(&da.volume).expect("finite volumes").then(da.id.cmp(&db.id))
    });
    let mut loads = vec![0.0; input.num_links];
    let mut choice = vec![0; input.demands.len()];
    for &i in &order {
        let d = &input.demands[i];
        choice[i] = best(&loads, d);
        add(&mut loads, d, choice[i], 1.0);
    }
    for _ in 0..20 {
        let mut moved = false;
        for &i in &order {
            let d = &input.demands[i];
            add(&mut loads, d, choice[i], -1.0);
            let p = best(&loads, d);
            if p != choice[i] && cost_of(&loads, d, choice[i]) - cost_of(&loads, d, p) > 1e-9 {
                choice[i] = p;
                moved = true;
            }
            add(&mut loads, d, choice[i], 1.0);
        }
        if !moved {
            break;
        }
    }
    let limit = theta * types.largest() * (1.0 + 1e-12);
    loads.iter().all(|&x| x <= limit).then_some(choice)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_link_path() -> Path {
        Path { node_seq: vec![0, 1], link_seq: vec![0] }
    }

    #[test]
    fn row_families() {
        let input = DimensioningInput {
            num_links: 2,
            demands: vec![DimDemand { id: 4, volume: 3.0, paths: vec![one_link_path()] }],
            types: CapacityTypeSet::default(),
            theta: 1.0 / 1.2,
        };
        let dm = build_dimensioning_model(&input).unwrap();
        assert_eq!(dm.model.count_constraints_with_prefix("cap["), 2);
        assert_eq!(dm.model.count_constraints_with_prefix("onetype["), 2);
        assert_eq!(dm.model.count_constraints_with_prefix("route["), 1);
        assert_eq!(dm.model.num_binaries(), 2 * 5 + 1);
    }

    #[test]
    fn rejects_oversized_demand_and_bad_theta() {
        let mut input = DimensioningInput {
            num_links: 1,
            demands: vec![DimDemand { id: 0, volume: 190.0, paths: vec![one_link_path()] }],
            types: CapacityTypeSet::default(),
            theta: 1.0 / 1.2,
        };
        assert!(matches!(build_dimensioning_model(&input), Err(FormulationError::DemandTooLarge { .. })));
        input.theta = 1.5;
        assert_eq!(build_dimensioning_model(&input).unwrap_err(), FormulationError::Theta(1.5));
    }

    #[test]
    fn smallest_fitting_type() {
        let types = CapacityTypeSet::default();
        let caps = capacities_for_loads(&[0.0, 3.0, 2.0, 8.4], &types, 1.0 / 1.2);
        assert_eq!(caps, vec![2.5, 10.0, 2.5, 40.0]);
    }
}
