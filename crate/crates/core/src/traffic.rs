//! Background demands between every ordered node pair and service-chain
//! demands from each S-NE to its P-NE.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::Topology;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrafficError {
    #[error("demand bounds must satisfy 0 < low <= high, got [{0}, {1}]")]
    BadBounds(f64, f64),
    #[error("demands per chain must be >= 1")]
    NoDemands,
    #[error("demand volume must be positive, got {0}")]
    BadVolume(f64),
    #[error("chain {0} has an invalid p-ne")]
    BadAnchor(usize),
    #[error("chain template must start and end with a non-replicable VNF")]
    BadTemplate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DemandClass {
    Background,
    Chain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub id: usize,
    pub src: usize,
    pub dst: usize,
    pub volume_gbps: f64,
    pub class: DemandClass,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chain_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VnfSpec {
    pub index: usize,
    pub label: String,
    pub replicable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceChain {
    pub id: usize,
    pub s_ne: usize,
    pub p_ne: usize,
    pub vnfs: Vec<VnfSpec>,
    /// Ids of the chain's demands.
    pub demands: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSpec {
    pub background: Vec<Demand>,
    pub chain_demands: Vec<Demand>,
    pub chains: Vec<ServiceChain>,
    pub rng_seed: u64,
}

impl TrafficSpec {
    pub fn chain_demands_of(&self, chain: &ServiceChain) -> Vec<&Demand> {
        chain
            .demands
            .iter()
            .map(|id| {
                self.chain_demands
                    .iter()
                    .find(|d| d.id == *id)
                    .expect("chain references a known demand")
            })
            .collect()
    }

    /// Background and chain demands together, in id order.
    pub fn all_demands(&self) -> Vec<&Demand> {
        self.background.iter().chain(&self.chain_demands).collect()
    }
}

/// VNF1 and VNF4 fixed, VNF2 and VNF3 replicable.
pub fn default_chain_template() -> Vec<VnfSpec> {
    [false, true, true, false]
        .iter()
        .enumerate()
        .map(|(i, &r)| VnfSpec { index: i, label: format!("VNF{}", i + 1), replicable: r })
        .collect()
}

pub fn validate_template(vnfs: &[VnfSpec]) -> Result<(), TrafficError> {
    match (vnfs.first(), vnfs.last()) {
        (Some(first), Some(last)) if !first.replicable && !last.replicable => {}
        _ => return Err(TrafficError::BadTemplate),
    }
    if vnfs.iter().enumerate().any(|(i, v)| v.index != i) {
        return Err(TrafficError::BadTemplate);
    }
    Ok(())
}

/// One demand per ordered pair `(src, dst)`, `src != dst`, pairs visited
/// in lexicographic id order with one uniform draw from `[low, high]` each.
pub fn gen_background(topo: &Topology, low: f64, high: f64, seed: u64) -> Result<Vec<Demand>, TrafficError> {
    if !(low > 0.0 && low <= high && high.is_finite()) {
        return Err(TrafficError::BadBounds(low, high));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = topo.num_nodes();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for src in 0..n {
        for dst in 0..n {
            if src == dst {
                continue;
            }
            let volume = if low == high { low } else { rng.random_range(low..=high) };
            out.push(Demand {
                id: out.len(),
                src,
                dst,
                volume_gbps: volume,
                class: DemandClass::Background,
                chain_id: None,
            });
        }
    }
    Ok(out)
}

/// One chain per S-NE, in node id order, each using `template`.
pub fn chains_for_gateways(topo: &Topology, template: &[VnfSpec]) -> Result<Vec<ServiceChain>, TrafficError> {
    validate_template(template)?;
    Ok(topo
        .s_nes()
        .into_iter()
        .enumerate()
        .map(|(id, s)| ServiceChain {
            id,
            s_ne: s,
            p_ne: topo.anchor(s).expect("s-ne has an anchor"),
            vnfs: template.to_vec(),
            demands: Vec::new(),
        })
        .collect())
}

/// Gives every chain `per_chain` demands of `volume_gbps` from its S-NE to
/// its P-NE. Ids start at `first_id`, chain by chain.
pub fn gen_chain_demands(
    chains: &[ServiceChain],
    per_chain: usize,
    volume_gbps: f64,
    first_id: usize,
    num_nodes: usize,
) -> Result<(Vec<ServiceChain>, Vec<Demand>), TrafficError> {
    if per_chain == 0 {
        return Err(TrafficError::NoDemands);
    }
    if !(volume_gbps > 0.0) || !volume_gbps.is_finite() {
        return Err(TrafficError::BadVolume(volume_gbps));
    }
    let mut out_chains = chains.to_vec();
    let mut demands = Vec::new();
    for chain in &mut out_chains {
        if chain.p_ne >= num_nodes || chain.p_ne == chain.s_ne {
            return Err(TrafficError::BadAnchor(chain.id));
        }
        chain.demands.clear();
        for _ in 0..per_chain {
            let id = first_id + demands.len();
            chain.demands.push(id);
            demands.push(Demand {
                id,
                src: chain.s_ne,
                dst: chain.p_ne,
                volume_gbps,
                class: DemandClass::Chain,
                chain_id: Some(chain.id),
            });
        }
    }
    Ok((out_chains, demands))
}

/// Background plus chain traffic for an annotated topology.
pub fn build_traffic(
    topo: &Topology,
    low: f64,
    high: f64,
    seed: u64,
    template: &[VnfSpec],
    per_chain: usize,
    volume_gbps: f64,
) -> Result<TrafficSpec, TrafficError> {
    let background = gen_background(topo, low, high, seed)?;
    let chains = chains_for_gateways(topo, template)?;
    let (chains, chain_demands) = if chains.is_empty() {
        (chains, Vec::new())
    } else {
        gen_chain_demands(&chains, per_chain, volume_gbps, background.len(), topo.num_nodes())?
    };
    Ok(TrafficSpec { background, chain_demands, chains, rng_seed: seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::parse_topology;

    #[test]
    fn degenerate_interval() {
        let t = parse_topology("node A\nnode B\nlink A B\n").unwrap();
        let d = gen_background(&t, 5.0, 5.0, 123).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|d| d.volume_gbps == 5.0));
        assert_eq!((d[0].src, d[0].dst, d[1].src, d[1].dst), (0, 1, 1, 0));
    }

    #[test]
    fn bad_inputs() {
        let t = parse_topology("node A\nnode B\nlink A B\n").unwrap();
        assert!(gen_background(&t, 0.0, 1.0, 1).is_err());
        assert!(gen_background(&t, 2.0, 1.0, 1).is_err());
        let chain = ServiceChain { id: 0, s_ne: 0, p_ne: 1, vnfs: default_chain_template(), demands: vec![] };
        assert_eq!(gen_chain_demands(&[chain.clone()], 0, 4.4, 0, 2), Err(TrafficError::NoDemands));
        assert!(gen_chain_demands(&[chain], 1, -1.0, 0, 2).is_err());
    }

    #[test]
    fn single_chain_demand() {
        let chain = ServiceChain { id: 0, s_ne: 1, p_ne: 0, vnfs: default_chain_template(), demands: vec![] };
        let (chains, d) = gen_chain_demands(&[chain], 1, 4.4, 10, 2).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].id, d[0].src, d[0].dst), (10, 1, 0));
        assert_eq!(chains[0].demands, vec![10]);
        assert_eq!(d[0].chain_id, Some(0));
    }

    #[test]
    fn template_shape() {
        let t = default_chain_template();
        assert_eq!(t.iter().map(|v| v.replicable).collect::<Vec<_>>(), vec![false, true, true, false]);
        let mut bad = t.clone();
        bad[3].replicable = true;
        assert_eq!(validate_template(&bad), Err(TrafficError::BadTemplate));
        assert_eq!(validate_template(&[]), Err(TrafficError::BadTemplate));
    }
}
