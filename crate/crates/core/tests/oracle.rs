use std::collections::BTreeSet;

use proptest::prelude::*;
use vnfrep_core::formulations::{check_placement, placement_objective, ChainPlacement, Placement, RaInput};
use vnfrep_core::oracle::{
    oracle_ra, oracle_te, predicted_ra_leaves, ra_assignment_objective, ra_feasible, Decisions, RaChoice,
};
use vnfrep_core::tiny::{parse_tiny, TinyInstance, TinyProblem};

fn corpus() -> Vec<TinyInstance> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .map(|p| parse_tiny(&std::fs::read_to_string(p).unwrap()).unwrap())
        .collect()
}

fn to_placement(choices: &[RaChoice]) -> Placement {
    let chains = choices
        .iter()
        .map(|c| {
            let mut active = c.active.clone();
            active.sort_unstable();
            let hosts = c
                .hosts
                .iter()
                .map(|h| {
                    let mut h = h.clone();
                    h.sort_unstable();
                    h
                })
                .collect();
            ChainPlacement { active_paths: active, demand_paths: c.demand_path.clone(), hosts }
        })
        .collect();
    let used: BTreeSet<usize> = choices.iter().flat_map(|c| c.hosts.iter().flatten().copied()).collect();
    Placement { chains, used_nodes: used.into_iter().collect() }
}

#[test]
fn explored_leaves_match_the_count_formula() {
    let all = corpus();
    assert!(all.len() >= 12);
    for inst in &all {
        match &inst.problem {
            TinyProblem::Te(input) => {
                let r = oracle_te(input).unwrap();
                let want: u64 = input.demands.iter().map(|d| d.paths.len() as u64).product();
                assert_eq!(r.explored, want, "{}", inst.name);
            }
            TinyProblem::Ra(input) => {
                let r = oracle_ra(input).unwrap();
                let want: u64 = (0..input.chains.len()).map(|c| predicted_ra_leaves(input, c)).sum();
                assert_eq!(r.explored, want, "{}", inst.name);
            }
        }
    }
    let te43 = all.iter().find(|i| i.name == "te-4x3").unwrap();
    let TinyProblem::Te(input) = &te43.problem else { panic!() };
    assert_eq!(oracle_te(input).unwrap().explored, 81);
}

#[test]
fn oracle_optima_are_feasible_and_rescore() {
    for inst in corpus() {
        let TinyProblem::Ra(input) = &inst.problem else { continue };
        let r = oracle_ra(input).unwrap();
        let Decisions::Ra(choices) = &r.decisions else { panic!("{}: no optimum", inst.name) };
        assert!(ra_feasible(input, choices), "{}", inst.name);
        assert!((ra_assignment_objective(input, choices) - r.objective).abs() < 1e-9);
        let pl = to_placement(choices);
        check_placement(input, &pl).unwrap_or_else(|v| panic!("{}: {v}", inst.name));
        assert!((placement_objective(input, &pl) - r.objective).abs() < 1e-9, "{}", inst.name);
    }
}

fn fan() -> RaInput {
    let inst = corpus().into_iter().find(|i| i.name == "fan3-r2").unwrap();
    let TinyProblem::Ra(input) = inst.problem else { panic!() };
    input
}

fn subset(mask: u32, items: &[usize]) -> Vec<usize> {
    items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &n)| n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// No feasible assignment beats the oracle optimum.
    #[test]
    fn oracle_is_a_lower_bound(
        active_mask in 1u32..8,
        demand_picks in prop::collection::vec(0usize..3, 3),
        host_masks in prop::collection::vec(1u32..256, 4),
        alpha in prop::bool::ANY,
    ) {
        let mut input = fan();
        if !alpha {
            input.alpha = 0.0;
            input.beta = 1.0;
        }
        let ch = &input.chains[0];
        let active = subset(active_mask, &[0, 1, 2]);
        let demand_path: Vec<usize> =
            demand_picks.iter().take(ch.demand_volumes.len()).map(|&i| active[i % active.len()]).collect();
        let nodes: Vec<usize> = (0..input.num_nodes).collect();
        let hosts: Vec<Vec<usize>> = host_masks.iter().take(ch.vnfs.len()).map(|&m| subset(m, &nodes)).collect();
        let choice = vec![RaChoice { active, demand_path, hosts }];
        let best = oracle_ra(&input).unwrap().objective;
        if ra_feasible(&input, &choice) {
            prop_assert!(ra_assignment_objective(&input, &choice) >= best - 1e-9);
        }
    }
}
