use std::collections::BTreeSet;

use proptest::prelude::*;
use vnfrep_core::cost::default_cost_function;
use vnfrep_core::formulations::*;
use vnfrep_core::oracle::{ra_feasible, RaChoice};
use vnfrep_core::paths::{link_disjoint_set, Path};
use vnfrep_core::scenarios::{prepare, RaParams, ScenarioConfig};
use vnfrep_core::topology::{parse_topology, CapacityTypeSet, Topology};
use vnfrep_core::traffic::default_chain_template;
use vnfrep_milp::{check_solution, solve, SolverConfig, Status};

fn path(topo: &Topology, names: &[&str]) -> Path {
    let node_seq: Vec<usize> = names.iter().map(|n| topo.node_id(n).unwrap()).collect();
    let link_seq = node_seq.windows(2).map(|w| topo.link_between(w[0], w[1]).unwrap()).collect();
    Path { node_seq, link_seq }
}

// --- dimensioning -------------------------------------------------------

fn one_link(volumes: &[f64]) -> DimensioningInput {
    let topo = parse_topology("node A\nnode B\narc A B\n").unwrap();
    let p = path(&topo, &["A", "B"]);
    DimensioningInput {
        num_links: 1,
        demands: volumes.iter().enumerate().map(|(id, &volume)| DimDemand { id, volume, paths: vec![p.clone()] }).collect(),
        types: CapacityTypeSet::default(),
        theta: 1.0 / 1.2,
    }
}

fn dimension(input: &DimensioningInput) -> Vec<f64> {
    let dm = build_dimensioning_model(input).unwrap();
    let sol = solve(&dm.model, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    let types = input.types.as_slice();
    dm.c.iter()
        .map(|row| {
            let t = row.iter().position(|&v| sol.values[v.0] > 0.5).unwrap();
            types[t]
        })
        .collect()
}

#[test]
fn three_gbps_needs_a_ten_gbps_link() {
    assert_eq!(dimension(&one_link(&[3.0])), vec![10.0]);
    // 2.5 * theta is just above 2.08
    assert_eq!(dimension(&one_link(&[2.0])), vec![2.5]);
    assert_eq!(dimension(&one_link(&[2.1])), vec![10.0]);
    assert_eq!(dimension(&one_link(&[20.0, 13.0])), vec![40.0]);
}

#[test]
fn no_demand_gets_the_smallest_type() {
    assert_eq!(dimension(&one_link(&[])), vec![2.5]);
}

#[test]
fn dimensioning_row_counts() {
    let input = one_link(&[1.0, 2.0, 3.0]);
    let dm = build_dimensioning_model(&input).unwrap();
    assert_eq!(dm.model.count_constraints_with_prefix("cap["), 1);
    assert_eq!(dm.model.count_constraints_with_prefix("onetype["), 1);
    assert_eq!(dm.model.count_constraints_with_prefix("route["), 3);
    assert_eq!(dm.model.num_vars(), 5 + 3);
}

#[test]
fn capacities_follow_theta() {
    let types = CapacityTypeSet::default();
    let theta = 1.0 / 1.2;
    let loads = [0.0, 2.0, 2.5, 8.3, 8.4, 33.0, 34.0, 166.0, 167.0];
    let caps = capacities_for_loads(&loads, &types, theta);
    assert_eq!(caps, vec![2.5, 2.5, 10.0, 10.0, 40.0, 40.0, 100.0, 200.0, 200.0]);
}

// --- traffic engineering --------------------------------------------------

fn parallel() -> (Topology, Vec<Path>) {
    let topo = parse_topology("node A\nnode B\nnode C\narc A C 10\narc A B 10\narc B C 10\n").unwrap();
    let paths = vec![path(&topo, &["A", "C"]), path(&topo, &["A", "B", "C"])];
    (topo, paths)
}

#[test]
fn single_path_cost_is_the_envelope() {
    let (_, paths) = parallel();
    let input = TeInput {
        capacities: vec![10.0; 3],
        demands: vec![RoutedDemand { id: 0, volume: 5.0, paths: vec![paths[0].clone()] }],
        cost: default_cost_function(),
    };
    let te = build_te_model(&input).unwrap();
    let sol = solve(&te.model, &SolverConfig::default()).unwrap();
    let want = default_cost_function().envelope(0.5);
    assert!((sol.objective - want).abs() < 1e-9);
    assert_eq!(extract_routing(&te, &sol.values).unwrap(), vec![0]);
}

#[test]
fn two_demands_split_across_parallel_paths() {
    let (_, paths) = parallel();
    let input = TeInput {
        capacities: vec![10.0; 3],
        demands: (0..2).map(|id| RoutedDemand { id, volume: 6.0, paths: paths.clone() }).collect(),
        cost: default_cost_function(),
    };
    let te = build_te_model(&input).unwrap();
    let sol = solve(&te.model, &SolverConfig::default()).unwrap();
    let mut routing = extract_routing(&te, &sol.values).unwrap();
    routing.sort_unstable();
    assert_eq!(routing, vec![0, 1]);
    let f = default_cost_function();
    assert!((sol.objective - 3.0 * f.envelope(0.6)).abs() < 1e-9);
    assert!((te_objective(&input, &extract_routing(&te, &sol.values).unwrap()) - sol.objective).abs() < 1e-9);
    for (l, &k) in te.k.iter().enumerate() {
        let loads = link_loads(3, &input.demands, &extract_routing(&te, &sol.values).unwrap());
        assert!((sol.values[k.0] - f.envelope(loads[l] / 10.0)).abs() < 1e-6);
    }
}

// --- resource allocation: model size ---------------------------------------

fn janos_input(r_max: usize, params: RaParams) -> RaInput {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/janos-us.toml");
    let mut cfg = ScenarioConfig::load(&path).unwrap();
    cfg.ra.r_max = r_max;
    let prep = prepare(&cfg).unwrap();
    let nl = prep.topology.num_links();
    prep.ra_input(&vec![40.0; nl], &vec![0.1; nl], &params)
}

/// Row count of each family, counted node by node.
fn count_rows(input: &RaInput) -> Vec<(&'static str, usize)> {
    let chains = &input.chains;
    let on_chain = |c: &RaChain, n: usize| input.dc_candidates[n] && c.paths.iter().any(|p| p.node_seq.contains(&n));
    let hosting: Vec<usize> = (0..input.num_nodes).filter(|&n| chains.iter().any(|c| on_chain(c, n))).collect();
    let mut excl = 0;
    let mut link = 0;
    for c in chains {
        let inner = c.vnfs[1..c.vnfs.len() - 1].iter().filter(|v| v.replicable).count();
        for n in 0..input.num_nodes {
            if !on_chain(c, n) {
                continue;
            }
            link += c.vnfs.len();
            let k = c.paths.iter().filter(|p| p.node_seq.contains(&n)).count();
            excl += k * k.saturating_sub(1) / 2 * inner;
        }
    }
    let per_chain = |f: &dyn Fn(&RaChain) -> usize| chains.iter().map(f).sum::<usize>();
    let node_visits = |c: &RaChain| c.paths.iter().map(|p| p.hops() + 1).sum::<usize>();
    vec![
        ("cost[", if input.alpha > 0.0 { input.capacities.len() * 6 } else { 0 }),
        ("demands[", chains.len()),
        ("route[", per_chain(&|c| c.demand_volumes.len())),
        ("use[", per_chain(&|c| c.demand_volumes.len() * c.paths.len())),
        ("active[", per_chain(&|c| c.paths.len())),
        ("paths_lo[", chains.len()),
        ("paths_hi[", chains.len()),
        ("place[", per_chain(&|c| c.paths.len() * c.vnfs.len())),
        ("order[", per_chain(&|c| node_visits(c) * (c.vnfs.len() - 1))),
        ("replica[", per_chain(&|c| c.vnfs.len())),
        ("excl[", excl),
        ("act_lo[", hosting.len()),
        ("act_hi[", hosting.len()),
        ("wmax[", if input.w_max.is_some() { hosting.len() } else { 0 }),
        ("maxdc", usize::from(input.max_dc.is_some())),
        ("link[", if input.link_rows { link } else { 0 }),
        ("sym[", if input.break_symmetry { per_chain(&|c| c.demand_volumes.len() - 1) } else { 0 }),
    ]
}

#[test]
fn ra_row_counts_on_janos() {
    let base = RaParams { alpha: 1.0, beta: 0.0, w_max: None, max_dc: None, break_symmetry: true, link_rows: true };
    let variants = [
        base,
        RaParams { alpha: 0.0, beta: 1.0, ..base },
        RaParams { w_max: Some(8), ..base },
        RaParams { alpha: 0.0, beta: 1.0, w_max: Some(8), break_symmetry: false, ..base },
        RaParams { w_max: Some(8), max_dc: Some(6), link_rows: false, ..base },
    ];
    for r in 0..=2 {
        for params in variants {
            let input = janos_input(r, params);
            let ra = build_ra_model(&input).unwrap();
            let rows = count_rows(&input);
            let mut total = 0;
            for (family, want) in &rows {
                let got = ra.model.count_constraints_with_prefix(family);
                assert_eq!(got, *want, "r_max={r} {params:?} family {family}");
                assert_eq!(RaCounts::predict(&input).0[family], *want, "predict {family}");
                total += want;
            }
            assert_eq!(ra.model.num_constraints(), total, "r_max={r} {params:?}");

            let hosts: usize = (0..input.chains.len()).map(|c| input.host_nodes(c).len() * 4).sum();
            let routing: usize = input.chains.iter().map(|c| (c.demand_volumes.len() + 1) * c.paths.len()).sum();
            let nodes = rows.iter().find(|r| r.0 == "act_lo[").unwrap().1;
            let k = if params.alpha > 0.0 { input.capacities.len() } else { 0 };
            assert_eq!(ra.model.num_vars(), k + routing + hosts + nodes);
        }
    }
}

#[test]
fn replica_paths_grow_with_r_max() {
    let base = RaParams { alpha: 1.0, beta: 0.0, w_max: None, max_dc: None, break_symmetry: true, link_rows: true };
    let sizes: Vec<usize> = (0..=2).map(|r| build_ra_model(&janos_input(r, base)).unwrap().model.num_vars()).collect();
    assert!(sizes[0] < sizes[1] && sizes[1] <= sizes[2], "{sizes:?}");
}

// --- resource allocation: small instances ----------------------------------

fn diamond() -> (Topology, RaInput) {
    // A-B-D and A-C-D, plus a spur B-E that no chain path touches
    let topo = parse_topology("node A\nnode B\nnode C\nnode D\nnode E\nlink A B 10\nlink B D 10\nlink A C 10\nlink C D 10\nlink B E 10\n")
        .unwrap();
    let paths = vec![path(&topo, &["A", "B", "D"]), path(&topo, &["A", "C", "D"])];
    let nl = topo.num_links();
    let input = RaInput {
        num_nodes: topo.num_nodes(),
        capacities: vec![10.0; nl],
        background_util: vec![0.0; nl],
        chains: vec![RaChain { id: 0, vnfs: default_chain_template(), demand_volumes: vec![2.0, 2.0, 1.0], paths }],
        cost: default_cost_function(),
        alpha: 1.0,
        beta: 0.0,
        r_max: 1,
        w_max: Some(4),
        max_dc: Some(3),
        dc_candidates: vec![true; 5],
        break_symmetry: false,
        link_rows: true,
    };
    (topo, input)
}

/// VNF1 at A, VNF2 replicated on B and C, VNF3 replicated on B and C, VNF4 at D.
fn good_placement() -> Placement {
    Placement {
        chains: vec![ChainPlacement {
            active_paths: vec![0, 1],
            demand_paths: vec![0, 1, 0],
            hosts: vec![vec![0], vec![1, 2], vec![1, 2], vec![3]],
        }],
        used_nodes: vec![0, 1, 2, 3],
    }
}

#[test]
fn good_placement_passes() {
    let (_, input) = diamond();
    let mut input = input;
    input.max_dc = Some(4);
    check_placement(&input, &good_placement()).unwrap();
}

fn rejected(input: &RaInput, pl: &Placement) -> PlacementViolation {
    check_placement(input, pl).expect_err("placement must be rejected")
}

#[test]
fn negative_placements_are_rejected() {
    let (_, mut input) = diamond();
    input.max_dc = Some(4);
    use PlacementViolation::*;

    // VNF3 before VNF2 on the upper path
    let mut pl = good_placement();
    pl.chains[0].active_paths = vec![0];
    pl.chains[0].demand_paths = vec![0, 0, 0];
    pl.chains[0].hosts = vec![vec![0], vec![3], vec![1], vec![3]];
    pl.used_nodes = vec![0, 1, 3];
    assert!(matches!(rejected(&input, &pl), Order { vnf: 2, .. }));

    // replicas of VNF2 both on A, which lies on both active paths
    let mut pl = good_placement();
    pl.chains[0].hosts[1] = vec![0];
    assert!(matches!(rejected(&input, &pl), SharedReplica { vnf: 1, node: 0, .. }));

    // w_max breach: node D carries four VNFs
    let mut pl = good_placement();
    pl.chains[0].hosts = vec![vec![0], vec![1, 2], vec![1, 2], vec![3]];
    input.w_max = Some(1);
    assert!(matches!(rejected(&input, &pl), NodeCapacity { w_max: 1, .. }));
    input.w_max = Some(4);

    // VNF1 is not replicable
    let mut pl = good_placement();
    pl.chains[0].hosts[0] = vec![0, 1];
    assert!(matches!(rejected(&input, &pl), TooManyInstances { vnf: 0, limit: 1, .. }));

    // a demand on a path that is not active
    let mut pl = good_placement();
    pl.chains[0].active_paths = vec![0];
    pl.chains[0].hosts = vec![vec![0], vec![1], vec![1], vec![3]];
    pl.used_nodes = vec![0, 1, 3];
    assert!(matches!(rejected(&input, &pl), InactivePathUsed { demand: 1, path: 1, .. }));

    // active path without VNF3
    let mut pl = good_placement();
    pl.chains[0].hosts[2] = vec![1];
    pl.chains[0].hosts[1] = vec![1, 2];
    assert!(matches!(rejected(&input, &pl), MissingVnf { path: 1, vnf: 2, .. }));

    // more active paths than r_max + 1
    input.r_max = 0;
    assert!(matches!(rejected(&input, &good_placement()), ActivePathCount { count: 2, limit: 1, .. }));
    input.r_max = 1;

    // too many data centers
    input.max_dc = Some(3);
    assert!(matches!(rejected(&input, &good_placement()), TooManyDcs { used: 4, max_dc: 3 }));
    input.max_dc = Some(4);

    // E is not on any candidate path
    let mut pl = good_placement();
    pl.chains[0].hosts[3] = vec![4];
    assert!(matches!(rejected(&input, &pl), NotHostable { vnf: 3, node: 4, .. }));

    // excluded candidate
    let mut excluded = input.clone();
    excluded.dc_candidates[3] = false;
    assert!(matches!(rejected(&excluded, &good_placement()), NotHostable { node: 3, .. }));

    // active path that carries no demand
    let mut pl = good_placement();
    pl.chains[0].demand_paths = vec![0, 0, 0];
    assert!(matches!(rejected(&input, &pl), IdlePath { path: 1, .. }));

    // used-node list out of sync
    let mut pl = good_placement();
    pl.used_nodes = vec![0, 1, 3];
    assert_eq!(rejected(&input, &pl), UsedNodes);
}

#[test]
fn single_chain_on_a_line_uses_one_dc() {
    let topo = parse_topology("node A\nnode B\nnode C\nlink A B 10\nlink B C 10\n").unwrap();
    let nl = topo.num_links();
    let input = RaInput {
        num_nodes: 3,
        capacities: vec![10.0; nl],
        background_util: vec![0.0; nl],
        chains: vec![RaChain {
            id: 0,
            vnfs: default_chain_template(),
            demand_volumes: vec![1.0; 3],
            paths: link_disjoint_set(&topo, 0, 2, 1).unwrap(),
        }],
        cost: default_cost_function(),
        alpha: 0.0,
        beta: 1.0,
        r_max: 0,
        w_max: None,
        max_dc: None,
        dc_candidates: vec![true; 3],
        break_symmetry: true,
        link_rows: true,
    };
    let ra = build_ra_model(&input).unwrap();
    let sol = solve(&ra.model, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, Status::Optimal);
    assert!((sol.objective - 1.0).abs() < 1e-9);
    let pl = extract_placement(&ra, &sol.values).unwrap();
    check_placement(&input, &pl).unwrap();
    assert_eq!(pl.used_nodes.len(), 1);

    // with w_max = 2 the four VNFs need two nodes
    let capped = RaInput { w_max: Some(2), ..input };
    let ra = build_ra_model(&capped).unwrap();
    let sol = solve(&ra.model, &SolverConfig::default()).unwrap();
    assert!((sol.objective - 2.0).abs() < 1e-9);
    let pl = extract_placement(&ra, &sol.values).unwrap();
    check_placement(&capped, &pl).unwrap();
    assert!(pl.vnfs_per_node(3).iter().all(|&k| k <= 2));
}

#[test]
fn placement_values_satisfy_the_model() {
    let (_, mut input) = diamond();
    input.max_dc = Some(4);
    let ra = build_ra_model(&input).unwrap();
    let values = placement_values(&ra, &input, &good_placement());
    check_solution(&ra.model, &values, 1e-9).unwrap();
    assert!((ra.model.objective_value(&values) - placement_objective(&input, &good_placement())).abs() < 1e-9);
    assert_eq!(extract_placement(&ra, &values).unwrap(), good_placement());
}

// --- checker vs oracle feasibility -------------------------------------------

fn subset(mask: u8, items: &[usize]) -> Vec<usize> {
    items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &n)| n).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn checker_agrees_with_oracle(
        active_mask in 1u8..4,
        demand_bits in prop::collection::vec(prop::bool::ANY, 3),
        host_masks in prop::collection::vec(1u8..16, 4),
        w_max in 1usize..5,
        r_max in 0usize..2,
        dc_excl in prop::option::of(0usize..4),
    ) {
        let (_, mut input) = diamond();
        input.w_max = Some(w_max);
        input.r_max = r_max;
        input.max_dc = Some(4);
        if let Some(n) = dc_excl {
            input.dc_candidates[n] = false;
        }
        let active = subset(active_mask, &[0, 1]);
        let demand_paths: Vec<usize> = demand_bits.iter().map(|&b| active[usize::from(b) % active.len()]).collect();
        let hosts: Vec<Vec<usize>> = host_masks.iter().map(|&m| subset(m, &[0, 1, 2, 3])).collect();
        let used: BTreeSet<usize> = hosts.iter().flatten().copied().collect();
        let pl = Placement {
            chains: vec![ChainPlacement { active_paths: active.clone(), demand_paths: demand_paths.clone(), hosts: hosts.clone() }],
            used_nodes: used.into_iter().collect(),
        };
        let choice = RaChoice { active, demand_path: demand_paths, hosts };
        let checker = check_placement(&input, &pl);
        prop_assert_eq!(checker.is_ok(), ra_feasible(&input, &[choice]), "{:?}", checker);
    }
}
