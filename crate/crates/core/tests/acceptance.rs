//! Acceptance checks on the pinned corpus and the janos-us scenario. Prints
//! one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::path::{Path, PathBuf};
use std::time::Instant;

use vnfrep_core::cost::default_cost_function;
use vnfrep_core::formulations::{check_placement, ChainPlacement, Placement, PlacementViolation, RaChain, RaInput};
use vnfrep_core::paths::Path as NetPath;
use vnfrep_core::scenarios::*;
use vnfrep_core::tiny::{oracle_check, parse_tiny, TinyProblem, AGREEMENT_TOL};
use vnfrep_core::topology::{parse_topology, Topology};
use vnfrep_core::traffic::default_chain_template;
use vnfrep_milp::SolverConfig;

const SLACK: f64 = 1e-9;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Janos {
    cfg: ScenarioConfig,
    prep: Prepared,
    dim: DimResult,
    te: TeResult,
    timings: Vec<Timing>,
}

impl Janos {
    fn load() -> Self {
        let cfg = ScenarioConfig::load(&root().join("scenarios/janos-us.toml")).unwrap();
        let prep = prepare(&cfg).unwrap();
        let mut timings = Vec::new();
        let dim = run_dimensioning(&prep, &cfg.solver.for_stage(Stage::Dimensioning).unwrap(), &mut timings).unwrap();
        let te = run_te(&prep, &dim, &cfg.solver.for_stage(Stage::Te).unwrap(), &mut timings).unwrap();
        Self { cfg, prep, dim, te, timings }
    }

    fn sweep(&self, scenario: ScenarioName, w_max: Option<usize>, r: &[usize]) -> Vec<PipelineOutcome> {
        let mut cfg = self.cfg.clone();
        cfg.ra.scenario = scenario;
        cfg.ra.w_max = w_max;
        sweep_from(&cfg, &self.prep, &self.dim, &self.te, r, &self.timings).unwrap()
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let dir = root().join("corpus");
    let mut files: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    let (mut n, mut te, mut ra) = (0, 0, 0);
    let mut r_seen = [false; 3];
    let mut weights = (false, false);
    let mut bad = Vec::new();
    for f in files.iter().filter(|p| p.extension().is_some_and(|e| e == "toml")) {
        let inst = parse_tiny(&std::fs::read_to_string(f).unwrap()).unwrap();
        match &inst.problem {
            TinyProblem::Te(_) => te += 1,
            TinyProblem::Ra(input) => {
                ra += 1;
                r_seen[input.r_max.min(2)] = true;
                weights.0 |= input.alpha == 1.0 && input.beta == 0.0;
                weights.1 |= input.alpha == 0.0 && input.beta == 1.0;
            }
        }
        let c = oracle_check(&inst, &SolverConfig::default()).unwrap();
        let gap = match (c.milp_objective, c.oracle_objective) {
            (Some(m), Some(o)) => (m - o).abs(),
            _ => f64::INFINITY,
        };
        if !c.agree || gap > AGREEMENT_TOL {
            bad.push(inst.name.clone());
        }
        n += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    let coverage = n >= 12 && te > 0 && ra > 0 && r_seen.iter().all(|&b| b) && weights.0 && weights.1;
    outcome(
        coverage && bad.is_empty() && secs < 60.0,
        format!("{n} instances ({te} TE, {ra} RA), mismatches {bad:?}, {secs:.1}s"),
    )
}

fn dc_counts(outs: &[PipelineOutcome]) -> Vec<usize> {
    outs.iter().map(|o| o.report.used_dcs).collect()
}

fn proven(outs: &[PipelineOutcome], stage: &str) -> bool {
    outs.iter().all(|o| o.ra.stats.iter().filter(|s| s.stage == stage).all(|s| s.status == "optimal"))
}

fn diamond() -> (RaInput, Placement) {
    let topo = parse_topology("node A\nnode B\nnode C\nnode D\nlink A B 10\nlink B D 10\nlink A C 10\nlink C D 10\n").unwrap();
    let path = |t: &Topology, names: &[&str]| {
        let node_seq: Vec<usize> = names.iter().map(|n| t.node_id(n).unwrap()).collect();
        let link_seq = node_seq.windows(2).map(|w| t.link_between(w[0], w[1]).unwrap()).collect();
        NetPath { node_seq, link_seq }
    };
    let input = RaInput {
        num_nodes: 4,
        capacities: vec![10.0; 8],
        background_util: vec![0.0; 8],
        chains: vec![RaChain {
            id: 0,
            vnfs: default_chain_template(),
            demand_volumes: vec![2.0, 2.0, 1.0],
            paths: vec![path(&topo, &["A", "B", "D"]), path(&topo, &["A", "C", "D"])],
        }],
        cost: default_cost_function(),
        alpha: 1.0,
        beta: 0.0,
        r_max: 1,
        w_max: Some(4),
        max_dc: Some(4),
        dc_candidates: vec![true; 4],
        break_symmetry: false,
        link_rows: true,
    };
    let pl = Placement {
        chains: vec![ChainPlacement {
            active_paths: vec![0, 1],
            demand_paths: vec![0, 1, 0],
            hosts: vec![vec![0], vec![1, 2], vec![1, 2], vec![3]],
        }],
        used_nodes: vec![0, 1, 2, 3],
    };
    (input, pl)
}

/// Each mutation must be rejected with the expected violation.
fn negative_placements() -> Vec<(&'static str, bool)> {
    use PlacementViolation::*;
    let (input, good) = diamond();
    let with = |f: &dyn Fn(&mut RaInput, &mut Placement)| {
        let (mut i, mut p) = (input.clone(), good.clone());
        f(&mut i, &mut p);
        check_placement(&i, &p)
    };
    let single_path = |p: &mut Placement| {
        p.chains[0].active_paths = vec![0];
        p.chains[0].demand_paths = vec![0, 0, 0];
    };
    vec![
        ("base placement accepted", check_placement(&input, &good).is_ok()),
        (
            "order swap",
            matches!(
                with(&|_, p| {
                    single_path(p);
                    p.chains[0].hosts = vec![vec![0], vec![3], vec![1], vec![3]];
                    p.used_nodes = vec![0, 1, 3];
                }),
                Err(Order { .. })
            ),
        ),
        ("replica on shared node", matches!(with(&|_, p| p.chains[0].hosts[1] = vec![0]), Err(SharedReplica { .. }))),
        ("w_max breach", matches!(with(&|i, _| i.w_max = Some(1)), Err(NodeCapacity { .. }))),
        (
            "non-replicable duplicated",
            matches!(with(&|_, p| p.chains[0].hosts[3] = vec![1, 3]), Err(TooManyInstances { vnf: 3, .. })),
        ),
        ("too many active paths", matches!(with(&|i, _| i.r_max = 0), Err(ActivePathCount { .. }))),
        ("max_dc breach", matches!(with(&|i, _| i.max_dc = Some(3)), Err(TooManyDcs { .. }))),
        (
            "demand on inactive path",
            matches!(
                with(&|_, p| {
                    p.chains[0].active_paths = vec![0];
                    p.chains[0].hosts = vec![vec![0], vec![1], vec![1], vec![3]];
                    p.used_nodes = vec![0, 1, 3];
                }),
                Err(InactivePathUsed { .. })
            ),
        ),
        ("active path missing a VNF", matches!(with(&|_, p| p.chains[0].hosts[2] = vec![1]), Err(MissingVnf { .. }))),
        ("excluded DC", matches!(with(&|i, _| i.dc_candidates[3] = false), Err(NotHostable { .. }))),
    ]
}

fn table_line(label: &str, o: &PipelineOutcome) -> String {
    let r = &o.report;
    format!(
        "{label} r_max={} dcs={} avg_util={:.4} max_util={:.4} objective={:.4} avg_vnfs_per_dc={:.2} avg_hops={:.3}",
        r.r_max, r.used_dcs, r.avg_util, r.max_util, r.ra_objective, r.avg_vnfs_per_dc, r.avg_path_hops
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let report = |name: &'static str, o: Outcome, results: &mut Vec<(&str, Outcome)>| {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };

    report("oracle-equivalence", oracle_equivalence(), &mut results);

    let t = Instant::now();
    let janos = Janos::load();
    println!("info dimensioning+te on janos-us: {:.1}s", t.elapsed().as_secs_f64());

    let nc = janos.sweep(ScenarioName::MinNc, None, &[0, 1, 2]);
    let counts = dc_counts(&nc);
    report(
        "minNC-three-dcs",
        outcome(counts == [3, 3, 3] && proven(&nc, "ra"), format!("dcs per r_max {counts:?}")),
        &mut results,
    );

    let ncc = janos.sweep(ScenarioName::MinNcConstr, Some(8), &[0, 1, 2]);
    let counts = dc_counts(&ncc);
    report(
        "minNC_constr-w8-six-dcs",
        outcome(counts[0] == 6 && proven(&ncc[..1], "ra"), format!("dcs at r_max=0: {} (r_max 0..2: {counts:?})", counts[0])),
        &mut results,
    );

    let lb = janos.sweep(ScenarioName::MinLb, None, &[0, 1, 2]);
    let obj: Vec<f64> = lb.iter().map(|o| o.report.ra_objective).collect();
    let umax: Vec<f64> = lb.iter().map(|o| o.report.max_util).collect();
    let mono = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0] + SLACK);
    report(
        "minLB-monotone",
        outcome(mono(&obj) && mono(&umax), format!("objective {obj:?}, max util {umax:?}")),
        &mut results,
    );

    let avg: Vec<f64> = nc.iter().map(|o| o.report.avg_util).collect();
    let max: Vec<f64> = nc.iter().map(|o| o.report.max_util).collect();
    let flat = |v: &[f64]| v.iter().all(|x| (x - v[0]).abs() <= SLACK);
    report(
        "minNC-utilization-flat",
        outcome(flat(&avg) && flat(&max), format!("avg {avg:?}, max {max:?}")),
        &mut results,
    );

    let all: Vec<&PipelineOutcome> = nc.iter().chain(&ncc).chain(&lb).collect();
    let rejected = all.iter().filter(|o| check_placement(&o.ra.input, &o.ra.placement).is_err()).count();
    let negatives = negative_placements();
    let missed: Vec<&str> = negatives.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    report(
        "placement-checker",
        outcome(
            rejected == 0 && missed.is_empty() && negatives.len() >= 9,
            format!("{} optimal placements checked, {} rejected; negative cases missed {missed:?}", all.len(), rejected),
        ),
        &mut results,
    );

    let f = default_cost_function();
    let grid: Vec<f64> = (0..1000).map(|i| 1.5 * i as f64 / 999.0).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| f.envelope(u)).collect();
    let convex = vals.windows(3).all(|w| w[0] + w[2] - 2.0 * w[1] >= -SLACK);
    let monotone = vals.windows(2).all(|w| w[1] >= w[0]);
    let mut gaps = vec![janos.te.stats.k_envelope_gap.unwrap_or(0.0)];
    gaps.extend(all.iter().flat_map(|o| o.ra.stats.iter().filter_map(|s| s.k_envelope_gap)));
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    report(
        "cost-envelope",
        outcome(convex && monotone && worst <= 1e-6, format!("grid convex={convex} monotone={monotone}, max |K - envelope(U)| {worst:.2e} over {} stages", gaps.len())),
        &mut results,
    );

    let types = janos.prep.types.as_slice();
    let theta = janos.prep.theta;
    let wrong = janos
        .dim
        .capacities
        .iter()
        .zip(&janos.dim.loads)
        .filter(|(&cap, &load)| types.iter().copied().find(|&t| load <= theta * t * (1.0 + 1e-12)) != Some(cap))
        .count();
    report(
        "capacity-rule",
        outcome(wrong == 0, format!("{} links, {wrong} not at the smallest type with load <= theta*t", janos.dim.capacities.len())),
        &mut results,
    );

    let t = Instant::now();
    let mut cfg = janos.cfg.clone();
    cfg.solver.workers = 1;
    let a = report_json(&run_pipeline(&cfg).unwrap().report);
    let b = report_json(&run_pipeline(&cfg).unwrap().report);
    report(
        "deterministic-report",
        outcome(a == b, format!("{} bytes, two full runs in {:.1}s", a.len(), t.elapsed().as_secs_f64())),
        &mut results,
    );

    // reported only
    println!("info dimensioning status={} provisioned={:.1} Gbps", janos.dim.stats.status, janos.dim.capacities.iter().sum::<f64>());
    for (label, outs) in [("minNC", &nc), ("minNC_constr", &ncc), ("minLB", &lb)] {
        for o in outs.iter() {
            println!("info {}", table_line(label, o));
        }
    }
    report("table-values-reported", outcome(true, "printed above, not asserted"), &mut results);

    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
