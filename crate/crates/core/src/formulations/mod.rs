//! Dimensioning, traffic-engineering and resource-allocation MILPs.

mod dimensioning;
mod placement;
mod ra;
mod te;

use thiserror::Error;
use vnfrep_milp::ModelError;

pub use dimensioning::{
    build_dimensioning_model, capacities_for_loads, greedy_routing, DimDemand, DimensioningInput, DimensioningModel,
};
pub use placement::{
    check_placement, placement_objective, ra_link_loads, ChainPlacement, Placement, PlacementViolation,
};
pub use ra::{
    build_ra_model, build_ra_tiebreak_model, extract_placement, placement_values, RaChain, RaCounts, RaInput, RaModel,
};
pub use te::{build_te_model, extract_routing, link_loads, te_objective, RoutedDemand, TeInput, TeModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormulationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("theta must lie in (0, 1], got {0}")]
    Theta(f64),
    #[error("demand {demand} ({volume} Gbps) exceeds theta * largest capacity type on every link")]
    DemandTooLarge { demand: usize, volume: f64 },
    #[error("demand {0} has no candidate path")]
    NoPath(usize),
    #[error("chain {0} has no candidate path")]
    NoChainPath(usize),
    #[error("link {0} has non-positive capacity")]
    Capacity(usize),
    #[error("expected {expected} per-link values, got {got}")]
    LinkCount { expected: usize, got: usize },
    #[error("alpha and beta must be nonnegative and not both zero")]
    Weights,
    #[error("w_max must be >= 1")]
    WMax,
    #[error("background utilization of link {0} is negative")]
    Background(usize),
    #[error("chain {0} has no VNFs")]
    EmptyChain(usize),
    #[error("chain {0} has no demands")]
    NoDemands(usize),
    #[error("binary `{var}` = {value} is not integral")]
    NonIntegral { var: String, value: f64 },
    #[error("solution has {got} values for {expected} variables")]
    ValueCount { expected: usize, got: usize },
}

/// Binary value of a solution entry, refusing anything not within `1e-6`
/// of 0 or 1.
pub(crate) fn binary_value(model: &vnfrep_milp::MilpModel, id: vnfrep_milp::VarId, values: &[f64]) -> Result<bool, FormulationError> {
    let v = values[id.0];
    if (v - v.round()).abs() > 1e-6 || !(-1e-6..=1.0 + 1e-6).contains(&v) {
        return Err(FormulationError::NonIntegral { var: model.var(id).name.clone(), value: v });
    }
    Ok(v > 0.5)
}
