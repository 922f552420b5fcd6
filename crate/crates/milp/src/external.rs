//! Hands a model to an external MILP solver through LP files.
//!
//! The command is split on whitespace and invoked as
//! `<cmd...> <model.lp> <solution.txt> <time_limit_s|none> <gap_abs>`.
//! It must write a solution file of the form
//!
//! ```text
//! status optimal
//! objective 12.5
//! bound 12.5
//! nodes 31
//! x_1 1
//! y 0.25
//! ```
//!
//! where `status` is one of `optimal`, `infeasible`, `unbounded`,
//! `time_limit` (with or without values) or `error`. Variables missing from
//! the file are taken as zero. Returned values are re-checked against the
//! model before being reported.

use std::collections::HashMap;
use std::process::Command;
use std::time::Instant;

use crate::check::check_solution;
use crate::error::SolveError;
use crate::lp_format::{export_lp, lp_var_names};
use crate::model::MilpModel;
use crate::solver::{SolveStats, Solution, SolverConfig, Status, FEAS_TOL};

pub(crate) fn solve_external(
    model: &MilpModel,
    cmd: &str,
    cfg: &SolverConfig,
) -> Result<Solution, SolveError> {
    model.validate()?;
    let mut parts = cmd.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| SolveError::Config("empty external solver command".into()))?;
    let started = Instant::now();
    let dir = tempfile::tempdir()?;
    let lp_path = dir.path().join("model.lp");
    let sol_path = dir.path().join("solution.txt");
    std::fs::write(&lp_path, export_lp(model))?;
    let limit = cfg
        .time_limit
        .map(|t| format!("{}", t.as_secs_f64()))
        .unwrap_or_else(|| "none".into());
    let output = Command::new(program)
        .args(parts)
        .arg(&lp_path)
        .arg(&sol_path)
        .arg(limit)
        .arg(format!("{}", cfg.gap_tol))
        .output()
        .map_err(|e| SolveError::External(format!("cannot run `{program}`: {e}")))?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(SolveError::External(format!(
            "`{cmd}` exited with {}: {}",
            output.status,
            stderr.trim()
        )));
    }
    let text = std::fs::read_to_string(&sol_path)
        .map_err(|e| SolveError::External(format!("no solution file: {e}")))?;
    let mut sol = parse_solution(model, &text)?;
    sol.stats.wall_time = started.elapsed();
    Ok(sol)
}

/// Parses a solution file produced by an external solver for `model`.
pub fn parse_solution(model: &MilpModel, text: &str) -> Result<Solution, SolveError> {
    let names = lp_var_names(model);
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut status = None;
    let mut bound = None;
    let mut nodes = 0;
    let mut values = vec![0.0; model.num_vars()];
    let mut seen_value = false;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || SolveError::External(format!("solution line {}: `{line}`", lineno + 1));
        let (key, val) = line.split_once(char::is_whitespace).ok_or_else(bad)?;
        let val = val.trim();
        match key {
            "status" => {
                status = Some(match val {
                    "optimal" => Status::Optimal,
                    "infeasible" => Status::Infeasible,
                    "unbounded" => Status::Unbounded,
                    "time_limit" => Status::TimeLimit,
                    "error" => Status::NumericalFailure,
                    _ => return Err(bad()),
                })
            }
            // recomputed from the values below
            "objective" => {}
            "bound" => bound = Some(val.parse::<f64>().map_err(|_| bad())?),
            "nodes" => nodes = val.parse::<u64>().map_err(|_| bad())?,
            name => {
                let j = *index
                    .get(name)
                    .ok_or_else(|| SolveError::External(format!("unknown variable `{name}`")))?;
                values[j] = val.parse::<f64>().map_err(|_| bad())?;
                seen_value = true;
            }
        }
    }
    let status = status.ok_or_else(|| SolveError::External("solution file has no status".into()))?;
    let stats = SolveStats {
        nodes,
        best_bound: bound,
        ..SolveStats::default()
    };
    let has_values = match status {
        Status::Optimal => true,
        Status::TimeLimit => seen_value,
        _ => false,
    };
    if !has_values {
        return Ok(Solution {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            stats,
            message: None,
        });
    }
    for (v, var) in values.iter_mut().zip(model.vars()) {
        if var.is_binary() {
            *v = v.round();
        }
    }
    if let Err(v) = check_solution(model, &values, FEAS_TOL) {
        return Ok(Solution {
            status: Status::NumericalFailure,
            objective: f64::NAN,
            values: Vec::new(),
            stats,
            message: Some(format!("external solution rejected: {v}")),
        });
    }
    let objective = model.objective_value(&values);
    Ok(Solution {
        status,
        objective,
        values,
        stats,
        message: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    fn model() -> MilpModel {
        let mut m = MilpModel::new("t");
        let x = m.add_binary("x[0]").unwrap();
        let y = m.add_continuous("y", 0.0, 2.0).unwrap();
        m.add_constraint("c", &[(x, 1.0), (y, 1.0)], Sense::Ge, 1.5).unwrap();
        m.set_objective(&[(x, 1.0), (y, 1.0)]).unwrap();
        m
    }

    #[test]
    fn parses_values_by_lp_name() {
        let s = parse_solution(&model(), "status optimal\nobjective 1.5\nx_0_ 1\ny 0.5\n").unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.values, vec![1.0, 0.5]);
        assert!((s.objective - 1.5).abs() < 1e-12);
    }

    #[test]
    fn infeasible_answer_is_rejected() {
        let s = parse_solution(&model(), "status optimal\nx_0_ 0\ny 0.5\n").unwrap();
        assert_eq!(s.status, Status::NumericalFailure);
    }

    #[test]
    fn unknown_names_are_errors() {
        assert!(parse_solution(&model(), "status optimal\nq 1\n").is_err());
        assert!(parse_solution(&model(), "x_0_ 1\n").is_err());
    }
}
