//! LP relaxation and branch-and-bound on top of [`crate::simplex`].

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::debug;

use crate::check::check_solution;
use crate::error::SolveError;
use crate::external;
use crate::model::MilpModel;
use crate::simplex::{LpStatus, Simplex};

/// Tolerance used to accept an incumbent and to call a binary integral.
pub const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    /// Time or node budget exhausted; the incumbent (if any) and the best
    /// bound are reported.
    TimeLimit,
    /// The simplex lost accuracy and could not recover.
    NumericalFailure,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::TimeLimit => "time_limit",
            Status::NumericalFailure => "numerical_failure",
        }
    }

    /// Whether a solve ending in this status may carry an incumbent.
    pub fn has_solution(self) -> bool {
        matches!(self, Status::Optimal | Status::TimeLimit)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_time: Duration,
    /// Objective of the root LP relaxation.
    pub root_bound: Option<f64>,
    /// Best proven lower bound at termination.
    pub best_bound: Option<f64>,
    /// Nodes whose LP objective came out below the bound inherited from
    /// their parent by more than round-off; should stay zero.
    pub bound_violations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub objective: f64,
    /// Indexed by variable id; empty when there is no solution.
    pub values: Vec<f64>,
    pub stats: SolveStats,
    pub message: Option<String>,
}

impl Solution {
    fn without_values(status: Status, stats: SolveStats, message: Option<String>) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            stats,
            message,
        }
    }

    /// True when `values` holds a feasible assignment.
    pub fn has_incumbent(&self) -> bool {
        self.status.has_solution() && !self.values.is_empty()
    }

    pub fn gap(&self) -> Option<f64> {
        match (self.has_incumbent(), self.stats.best_bound) {
            (true, Some(b)) => Some((self.objective - b).max(0.0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Backend {
    Embedded,
    /// Whitespace-separated command; see the `external` module for the protocol.
    External(String),
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedded" => Ok(Backend::Embedded),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(Backend::External(cmd.trim().to_string())),
                _ => Err(format!("unknown backend `{s}` (expected `embedded` or `external:<command>`)")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub time_limit: Option<Duration>,
    /// Deterministic budget on branch-and-bound nodes.
    pub node_limit: Option<u64>,
    /// Absolute optimality gap.
    pub gap_tol: f64,
    pub workers: usize,
    pub backend: Backend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_limit: None,
            node_limit: None,
            gap_tol: 1e-6,
            workers: 1,
            backend: Backend::Embedded,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolveError> {
        if !(self.gap_tol >= 0.0) {
            return Err(SolveError::Config(format!("gap_tol must be >= 0, got {}", self.gap_tol)));
        }
        if self.workers == 0 {
            return Err(SolveError::Config("workers must be >= 1".into()));
        }
        Ok(())
    }
}

/// Dispatches to the configured backend.
pub fn solve(model: &MilpModel, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    match &cfg.backend {
        Backend::Embedded => solve_milp(model, cfg),
        Backend::External(cmd) => external::solve_external(model, cmd, cfg),
    }
}

/// As [`solve`]; the embedded backend seeds its incumbent with `start`,
/// the external one ignores it.
pub fn solve_with_start(model: &MilpModel, cfg: &SolverConfig, start: Option<&[f64]>) -> Result<Solution, SolveError> {
    match &cfg.backend {
        Backend::Embedded => solve_milp_with_start(model, cfg, start),
        Backend::External(cmd) => external::solve_external(model, cmd, cfg),
    }
}

/// Solves the continuous relaxation of `model`.
pub fn solve_lp(model: &MilpModel) -> Result<Solution, SolveError> {
    model.validate()?;
    let start = Instant::now();
    let mut lp = Simplex::new(model);
    let status = finish_root(&mut lp, None);
    let stats = SolveStats {
        nodes: 0,
        lp_iterations: lp.iterations,
        wall_time: start.elapsed(),
        root_bound: None,
        best_bound: None,
        bound_violations: 0,
    };
    Ok(match status {
        LpStatus::Optimal => {
            let values = lp.values();
            let objective = model.objective_value(&values);
            Solution {
                status: Status::Optimal,
                objective,
                values,
                stats: SolveStats {
                    root_bound: Some(objective),
                    best_bound: Some(objective),
                    ..stats
                },
                message: None,
            }
        }
        LpStatus::Infeasible => Solution::without_values(Status::Infeasible, stats, None),
        LpStatus::Unbounded => Solution::without_values(Status::Unbounded, stats, None),
        LpStatus::Interrupted => Solution::without_values(Status::TimeLimit, stats, None),
        LpStatus::Numerical(msg) => {
            Solution::without_values(Status::NumericalFailure, stats, Some(msg))
        }
    })
}

/// Solve from scratch, then rebuild the tableau once and confirm the
/// answer against the original rows.
fn finish_root(lp: &mut Simplex, deadline: Option<Instant>) -> LpStatus {
    match lp.solve(deadline) {
        LpStatus::Optimal => {}
        other => return other,
    }
    match lp.refactor_and_resolve(deadline) {
        LpStatus::Optimal => {}
        other => return other,
    }
    let resid = lp.max_residual();
    if resid > FEAS_TOL {
        return LpStatus::Numerical(format!("residual {resid:.3e} after refactorization"));
    }
    LpStatus::Optimal
}

/// Branch-and-bound over the binary variables of `model`.
///
/// Depth-first, branching on the most fractional binary (ties to the
/// lowest id), exploring the child that rounds the LP value first, and
/// pruning any node whose inherited bound cannot beat the incumbent by more
/// than `gap_tol`.
pub fn solve_milp(model: &MilpModel, cfg: &SolverConfig) -> Result<Solution, SolveError> {
    solve_milp_with_start(model, cfg, None)
}

/// As [`solve_milp`], seeding the incumbent with `start` when that
/// assignment passes the feasibility checker.
pub fn solve_milp_with_start(
    model: &MilpModel,
    cfg: &SolverConfig,
    start: Option<&[f64]>,
) -> Result<Solution, SolveError> {
    model.validate()?;
    cfg.validate()?;
    let started = Instant::now();
    let deadline = cfg.time_limit.map(|t| started + t);
    let mut lp = Simplex::new(model);

    let root = finish_root(&mut lp, deadline);
    let mut stats = SolveStats {
        nodes: 1,
        lp_iterations: lp.iterations,
        ..SolveStats::default()
    };
    match root {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            stats.wall_time = started.elapsed();
            return Ok(Solution::without_values(Status::Infeasible, stats, None));
        }
        LpStatus::Unbounded => {
            stats.wall_time = started.elapsed();
            return Ok(Solution::without_values(Status::Unbounded, stats, None));
        }
        LpStatus::Interrupted => {
            stats.wall_time = started.elapsed();
            return Ok(Solution::without_values(Status::TimeLimit, stats, None));
        }
        LpStatus::Numerical(msg) => {
            stats.wall_time = started.elapsed();
            return Ok(Solution::without_values(Status::NumericalFailure, stats, Some(msg)));
        }
    }
    let root_obj = lp.objective();
    stats.root_bound = Some(root_obj);

    let binaries: Vec<usize> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_binary() && v.lower < v.upper)
        .map(|(j, _)| j)
        .collect();

    let integral_objective = model.objective().is_some_and(|terms| {
        terms
            .iter()
            .all(|&(v, c)| model.var(v).is_binary() && (c - c.round()).abs() <= 1e-12)
    });

    let shared = Shared {
        incumbent: Mutex::new(None),
        incumbent_bits: AtomicU64::new(f64::INFINITY.to_bits()),
        nodes: AtomicU64::new(1),
        stop: AtomicBool::new(false),
        numerical: Mutex::new(None),
    };
    if let Some(start) = start {
        if check_solution(model, start, FEAS_TOL).is_ok() {
            shared.offer(model.objective_value(start), start.to_vec());
        } else {
            debug!("initial incumbent rejected by checker");
        }
    }

    let mut first = Worker {
        model,
        cfg,
        binaries: &binaries,
        lp,
        fixed: vec![None; model.num_vars()],
        fix_list: Vec::new(),
        deadline,
        shared: &shared,
        bound_violations: 0,
        root_iterations: 0,
        integral_objective,
    };
    first.root_iterations = first.lp.iterations;

    let root_node = Node {
        fixes: Vec::new(),
        bound: root_obj,
        evaluated: true,
    };
    let mut leftovers: Vec<Node> = Vec::new();
    let mut lp_iterations;
    let mut bound_violations;

    if cfg.workers <= 1 {
        let mut stack = vec![root_node];
        first.explore(&mut stack, None);
        leftovers.extend(stack);
        lp_iterations = first.lp.iterations;
        bound_violations = first.bound_violations;
    } else {
        // ramp up on one thread until there is a frontier to share
        let mut stack = vec![root_node];
        first.explore(&mut stack, Some(4 * cfg.workers));
        lp_iterations = first.lp.iterations;
        bound_violations = first.bound_violations;
        let queue = Mutex::new(stack);
        let template = first.lp.clone();
        let template_fixed = first.fixed.clone();
        let template_list = first.fix_list.clone();
        let results: Vec<(u64, u64, Vec<Node>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.workers)
                .map(|_| {
                    let lp = template.clone();
                    let fixed = template_fixed.clone();
                    let fix_list = template_list.clone();
                    let queue = &queue;
                    let shared = &shared;
                    let binaries = &binaries;
                    scope.spawn(move || {
                        let mut w = Worker {
                            model,
                            cfg,
                            binaries,
                            lp,
                            fixed,
                            fix_list,
                            deadline,
                            shared,
                            bound_violations: 0,
                            root_iterations: 0,
                            integral_objective,
                        };
                        w.root_iterations = w.lp.iterations;
                        let mut left = Vec::new();
                        loop {
                            let next = queue.lock().unwrap().pop();
                            let Some(node) = next else { break };
                            let mut stack = vec![node];
                            w.explore(&mut stack, None);
                            if !stack.is_empty() {
                                left.extend(stack);
                                // budget exhausted: drain the queue into leftovers
                                left.extend(queue.lock().unwrap().drain(..));
                                break;
                            }
                        }
                        (w.lp.iterations - w.root_iterations, w.bound_violations, left)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for (iters, viol, left) in results {
            lp_iterations += iters;
            bound_violations += viol;
            leftovers.extend(left);
        }
    }

    stats.nodes = shared.nodes.load(Ordering::SeqCst);
    stats.lp_iterations = lp_iterations;
    stats.bound_violations = bound_violations;
    stats.wall_time = started.elapsed();
    let numerical = shared.numerical.lock().unwrap().take();
    let incumbent = shared.incumbent.lock().unwrap().take();

    let open_bound = leftovers
        .iter()
        .map(|n| n.bound)
        .fold(f64::INFINITY, f64::min);
    let solution = match incumbent {
        Some((obj, values)) => {
            let complete = leftovers.is_empty();
            stats.best_bound = Some(if complete { obj } else { open_bound.min(obj) });
            Solution {
                status: if complete { Status::Optimal } else { Status::TimeLimit },
                objective: obj,
                values,
                stats,
                message: numerical,
            }
        }
        None if !leftovers.is_empty() => {
            stats.best_bound = Some(open_bound);
            Solution::without_values(Status::TimeLimit, stats, numerical)
        }
        None if numerical.is_some() => {
            Solution::without_values(Status::NumericalFailure, stats, numerical)
        }
        None => Solution::without_values(Status::Infeasible, stats, None),
    };
    Ok(solution)
}

#[derive(Debug, Clone)]
struct Node {
    fixes: Vec<(usize, bool)>,
    /// LP objective of the parent (or of the node itself once evaluated).
    bound: f64,
    /// The root arrives already solved.
    evaluated: bool,
}

struct Shared {
    incumbent: Mutex<Option<(f64, Vec<f64>)>>,
    incumbent_bits: AtomicU64,
    nodes: AtomicU64,
    stop: AtomicBool,
    numerical: Mutex<Option<String>>,
}

impl Shared {
    fn best(&self) -> f64 {
        f64::from_bits(self.incumbent_bits.load(Ordering::SeqCst))
    }

    fn offer(&self, obj: f64, values: Vec<f64>) -> bool {
        let mut guard = self.incumbent.lock().unwrap();
        let better = match &*guard {
            None => true,
            Some((cur, _)) => obj < *cur - 1e-9,
        };
        if better {
            *guard = Some((obj, values));
            self.incumbent_bits.store(obj.to_bits(), Ordering::SeqCst);
        }
        better
    }

    fn note_numerical(&self, msg: String) {
        let mut guard = self.numerical.lock().unwrap();
        if guard.is_none() {
            *guard = Some(msg);
        }
    }
}

struct Worker<'a> {
    model: &'a MilpModel,
    cfg: &'a SolverConfig,
    binaries: &'a [usize],
    lp: Simplex,
    fixed: Vec<Option<bool>>,
    fix_list: Vec<usize>,
    deadline: Option<Instant>,
    shared: &'a Shared,
    bound_violations: u64,
    root_iterations: u64,
    integral_objective: bool,
}

impl Worker<'_> {
    fn prunable(&self, bound: f64) -> bool {
        // with integer costs on binaries only, no solution below ceil(bound)
        let bound = if self.integral_objective { (bound - FEAS_TOL).ceil() } else { bound };
        bound >= self.shared.best() - self.cfg.gap_tol
    }

    fn out_of_budget(&self) -> bool {
        if self.shared.stop.load(Ordering::SeqCst) {
            return true;
        }
        let over_nodes = self
            .cfg
            .node_limit
            .is_some_and(|lim| self.shared.nodes.load(Ordering::SeqCst) >= lim);
        let over_time = self.deadline.is_some_and(|d| Instant::now() >= d);
        if over_nodes || over_time {
            self.shared.stop.store(true, Ordering::SeqCst);
            return true;
        }
        false
    }

    /// Moves the LP to the bound state of `fixes`.
    fn apply(&mut self, fixes: &[(usize, bool)]) {
        let mut target: Vec<Option<bool>> = vec![None; 0];
        target.resize(self.fixed.len(), None);
        for &(j, v) in fixes {
            target[j] = Some(v);
        }
        let current = std::mem::take(&mut self.fix_list);
        for &j in &current {
            if target[j] != self.fixed[j] {
                let var = self.model.var(crate::model::VarId(j));
                self.lp.set_bounds(j, var.lower, var.upper);
                self.fixed[j] = None;
            }
        }
        for &(j, v) in fixes {
            if self.fixed[j] != Some(v) {
                let val = if v { 1.0 } else { 0.0 };
                self.lp.set_bounds(j, val, val);
                self.fixed[j] = Some(v);
            }
        }
        self.fix_list = fixes.iter().map(|&(j, _)| j).collect();
    }

    /// Starts the LP over from the slack basis under the current fixings.
    fn rebuild_lp(&mut self) -> LpStatus {
        let iterations = self.lp.iterations;
        self.lp = Simplex::new(self.model);
        self.lp.iterations = iterations;
        for &j in &self.fix_list {
            if let Some(v) = self.fixed[j] {
                let val = if v { 1.0 } else { 0.0 };
                self.lp.set_bounds(j, val, val);
            }
        }
        finish_root(&mut self.lp, self.deadline)
    }

    fn explore(&mut self, stack: &mut Vec<Node>, split_at: Option<usize>) {
        while let Some(node) = stack.pop() {
            if self.prunable(node.bound) {
                continue;
            }
            if split_at.is_some_and(|k| stack.len() + 1 >= k) {
                stack.push(node);
                return;
            }
            if !node.evaluated {
                if self.out_of_budget() {
                    stack.push(node);
                    return;
                }
                self.shared.nodes.fetch_add(1, Ordering::SeqCst);
                self.apply(&node.fixes);
                let mut status = self.lp.reoptimize(self.deadline);
                if let LpStatus::Numerical(_) = status {
                    status = self.lp.refactor_and_resolve(self.deadline);
                }
                if let LpStatus::Numerical(ref msg) = status {
                    debug!("rebuilding node LP after: {msg}");
                    status = self.rebuild_lp();
                }
                match status {
                    LpStatus::Optimal => {}
                    LpStatus::Infeasible => continue,
                    LpStatus::Interrupted => {
                        self.shared.stop.store(true, Ordering::SeqCst);
                        stack.push(node);
                        return;
                    }
                    LpStatus::Unbounded => {
                        self.shared
                            .note_numerical("unbounded LP below a bounded root".into());
                        continue;
                    }
                    LpStatus::Numerical(msg) => {
                        self.shared.note_numerical(msg);
                        continue;
                    }
                }
            }
            let obj = self.lp.objective();
            if obj < node.bound - 1e-6 * node.bound.abs().max(1.0) {
                self.bound_violations += 1;
            }
            if self.prunable(obj) {
                continue;
            }
            let values = self.lp.values();
            match self.most_fractional(&values) {
                None => self.accept(values),
                Some(j) => {
                    let near = values[j] >= 0.5;
                    let mut far_fixes = node.fixes.clone();
                    far_fixes.push((j, !near));
                    let mut near_fixes = node.fixes;
                    near_fixes.push((j, near));
                    stack.push(Node { fixes: far_fixes, bound: obj, evaluated: false });
                    stack.push(Node { fixes: near_fixes, bound: obj, evaluated: false });
                }
            }
        }
    }

    fn most_fractional(&self, values: &[f64]) -> Option<usize> {
        let mut best = None;
        let mut best_score = FEAS_TOL;
        for &j in self.binaries {
            if self.fixed[j].is_some() {
                continue;
            }
            let v = values[j];
            let score = (v - v.floor()).min(v.ceil() - v);
            if score > best_score {
                best_score = score;
                best = Some(j);
            }
        }
        best
    }

    fn accept(&mut self, mut values: Vec<f64>) {
        for (j, var) in self.model.vars().iter().enumerate() {
            if var.is_binary() {
                values[j] = values[j].round();
            }
        }
        match check_solution(self.model, &values, FEAS_TOL) {
            Ok(()) => {
                let obj = self.model.objective_value(&values);
                if self.shared.offer(obj, values) {
                    debug!("incumbent {obj}");
                }
            }
            Err(v) => {
                // tableau drift; rebuild and let the next node retry
                debug!("integral LP point rejected: {v}");
                match self.lp.refactor() {
                    Ok(false) => {}
                    Ok(true) => {
                        self.rebuild_lp();
                    }
                    Err(_) => self.shared.note_numerical(format!("rejected incumbent: {v}")),
                }
            }
        }
    }
}
