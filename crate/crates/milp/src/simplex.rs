//! Bounded-variable simplex on a dense tableau.
//!
//! Every constraint row `a·x (<=|=|>=) b` is scaled by its largest absolute
//! coefficient and turned into `a·x + s = b` with a logical column `s` whose
//! bounds encode the sense. The tableau holds `B^-1 [A | I]`; basic values
//! and reduced costs are maintained alongside it.
//!
//! Two algorithms share the tableau:
//! - dual simplex, used whenever the basis is dual feasible (always the case
//!   after bound tightening in branch-and-bound, and at the start for models
//!   with nonnegative costs);
//! - primal simplex, used after a zero-cost dual pass has reached a feasible
//!   basis for models that are not dual feasible at the slack basis.
//!
//! Both use a two-pass (Harris) ratio test and fall back to Bland's rule
//! after a long run of degenerate pivots.

use std::time::Instant;

use log::debug;

use crate::model::{MilpModel, Sense};

pub(crate) const PRIMAL_TOL: f64 = 1e-9;
pub(crate) const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-7;
const DROP_TOL: f64 = 1e-14;
const REFACTOR_INTERVAL: u64 = 1000;
const BLAND_AFTER: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Basic(usize),
    Lower,
    Upper,
    /// Free nonbasic column parked at zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Interrupted,
    Numerical(String),
}

#[derive(Debug, Clone)]
pub(crate) struct Simplex {
    m: usize,
    n: usize,
    width: usize,
    tab: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<Pos>,
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    pub(crate) iterations: u64,
    since_refactor: u64,
    degenerate_run: u32,
    iteration_cap: u64,
}

impl Simplex {
    /// Builds the relaxation of `model` (integrality dropped) at the slack
    /// basis. The model must have been validated.
    pub(crate) fn new(model: &MilpModel) -> Self {
        let n = model.num_vars();
        let m = model.num_constraints();
        let width = n + m;
        let mut tab = vec![0.0; m * width];
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut lo = Vec::with_capacity(width);
        let mut hi = Vec::with_capacity(width);
        let mut cost = vec![0.0; width];

        for var in model.vars() {
            lo.push(var.lower);
            hi.push(var.upper);
        }
        for &(v, c) in model.objective().unwrap_or(&[]) {
            cost[v.0] = c;
        }
        for (i, con) in model.constraints().iter().enumerate() {
            let scale = con
                .terms
                .iter()
                .fold(0.0_f64, |acc, &(_, c)| acc.max(c.abs()));
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let row: Vec<(usize, f64)> =
                con.terms.iter().map(|&(v, c)| (v.0, c / scale)).collect();
            for &(j, a) in &row {
                tab[i * width + j] = a;
            }
            tab[i * width + n + i] = 1.0;
            rows.push(row);
            rhs.push(con.rhs / scale);
            let (l, h) = match con.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
        }

        let mut pos = vec![Pos::Lower; width];
        let mut x = vec![0.0; width];
        for j in 0..n {
            let (p, v) = park(cost[j], lo[j], hi[j]);
            pos[j] = p;
            x[j] = v;
        }
        let basis: Vec<usize> = (0..m).map(|i| n + i).collect();
        for (i, &b) in basis.iter().enumerate() {
            pos[b] = Pos::Basic(i);
        }
        let beta = (0..m)
            .map(|i| rhs[i] - rows[i].iter().map(|&(j, a)| a * x[j]).sum::<f64>())
            .collect();
        let d = cost.clone();
        Self {
            m,
            n,
            width,
            tab,
            beta,
            basis,
            pos,
            x,
            lo,
            hi,
            cost,
            d,
            rows,
            rhs,
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            iteration_cap: 20 * (m + n) as u64 + 10_000,
        }
    }

    /// Solves from the current basis, whatever its state.
    pub(crate) fn solve(&mut self, deadline: Option<Instant>) -> LpStatus {
        if !self.is_dual_feasible() {
            let saved = std::mem::replace(&mut self.cost, vec![0.0; self.width]);
            self.d.iter_mut().for_each(|v| *v = 0.0);
            let status = self.dual(deadline);
            self.cost = saved;
            self.recompute_reduced_costs();
            match status {
                LpStatus::Optimal => {}
                other => return other,
            }
            match self.primal(deadline) {
                LpStatus::Optimal => {}
                other => return other,
            }
        }
        self.reoptimize(deadline)
    }

    /// Re-solves after bound changes that preserved dual feasibility.
    pub(crate) fn reoptimize(&mut self, deadline: Option<Instant>) -> LpStatus {
        if self.since_refactor >= REFACTOR_INTERVAL {
            match self.refactor() {
                Ok(false) => {}
                Ok(true) => return LpStatus::Numerical("basis repaired during refactorization".into()),
                Err(e) => return LpStatus::Numerical(e),
            }
        }
        for _ in 0..4 {
            match self.dual(deadline) {
                LpStatus::Optimal => {}
                other => return other,
            }
            if self.is_dual_feasible() {
                return LpStatus::Optimal;
            }
            match self.primal(deadline) {
                LpStatus::Optimal => {}
                other => return other,
            }
            if self.is_primal_feasible() {
                return LpStatus::Optimal;
            }
        }
        LpStatus::Numerical("primal and dual phases did not converge".into())
    }

    /// Rebuilds the tableau from the original rows and re-solves; used to
    /// clean up accumulated round-off before trusting a final answer.
    pub(crate) fn refactor_and_resolve(&mut self, deadline: Option<Instant>) -> LpStatus {
        match self.refactor() {
            Ok(false) => {}
            Ok(true) => return LpStatus::Numerical("basis repaired during refactorization".into()),
            Err(e) => return LpStatus::Numerical(e),
        }
        if self.is_dual_feasible() {
            self.reoptimize(deadline)
        } else if self.is_primal_feasible() {
            match self.primal(deadline) {
                LpStatus::Optimal => self.reoptimize(deadline),
                other => other,
            }
        } else {
            self.solve(deadline)
        }
    }

    /// Changes the bounds of structural column `j`, repositioning it if it
    /// is nonbasic so that the basis stays dual feasible.
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lo[j] = lo;
        self.hi[j] = hi;
        if let Pos::Basic(_) = self.pos[j] {
            return;
        }
        let (p, v) = if lo == hi {
            (Pos::Lower, lo)
        } else if self.d[j] > DUAL_TOL && lo.is_finite() {
            (Pos::Lower, lo)
        } else if self.d[j] < -DUAL_TOL && hi.is_finite() {
            (Pos::Upper, hi)
        } else {
            park(self.d[j], lo, hi)
        };
        let delta = v - self.x[j];
        if delta != 0.0 {
            let w = self.width;
            for i in 0..self.m {
                let a = self.tab[i * w + j];
                if a != 0.0 {
                    self.beta[i] -= a * delta;
                }
            }
        }
        self.x[j] = v;
        self.pos[j] = p;
    }

    pub(crate) fn values(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.value(j)).collect()
    }

    fn value(&self, j: usize) -> f64 {
        match self.pos[j] {
            Pos::Basic(i) => self.beta[i],
            _ => self.x[j],
        }
    }

    pub(crate) fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.value(j)).sum()
    }

    /// Largest violation of a scaled row or of a column bound, computed
    /// from the original rows rather than from the tableau.
    pub(crate) fn max_residual(&self) -> f64 {
        let vals = self.values();
        let mut worst = 0.0_f64;
        for (j, &v) in vals.iter().enumerate() {
            worst = worst.max(self.lo[j] - v).max(v - self.hi[j]);
        }
        for i in 0..self.m {
            let act: f64 = self.rows[i].iter().map(|&(j, a)| a * vals[j]).sum();
            let s = self.rhs[i] - act;
            let j = self.n + i;
            worst = worst.max(self.lo[j] - s).max(s - self.hi[j]);
        }
        worst
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lo[j] == self.hi[j]
    }

    fn is_dual_feasible(&self) -> bool {
        (0..self.width).all(|j| {
            if self.is_fixed(j) {
                return true;
            }
            match self.pos[j] {
                Pos::Basic(_) => true,
                Pos::Lower => self.d[j] >= -DUAL_TOL,
                Pos::Upper => self.d[j] <= DUAL_TOL,
                Pos::Zero => self.d[j].abs() <= DUAL_TOL,
            }
        })
    }

    fn is_primal_feasible(&self) -> bool {
        self.basis.iter().enumerate().all(|(i, &b)| {
            self.beta[i] >= self.lo[b] - PRIMAL_TOL && self.beta[i] <= self.hi[b] + PRIMAL_TOL
        })
    }

    fn recompute_reduced_costs(&mut self) {
        let w = self.width;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * w..(i + 1) * w];
                for (dj, &t) in self.d.iter_mut().zip(row) {
                    *dj -= cb * t;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn budget_exhausted(&self, start_iter: u64, deadline: Option<Instant>) -> Option<LpStatus> {
        if self.iterations - start_iter > self.iteration_cap {
            return Some(LpStatus::Numerical(format!(
                "iteration cap of {} reached",
                self.iteration_cap
            )));
        }
        if self.iterations % 32 == 0 {
            if let Some(dl) = deadline {
                if Instant::now() >= dl {
                    return Some(LpStatus::Interrupted);
                }
            }
        }
        None
    }

    fn primal(&mut self, deadline: Option<Instant>) -> LpStatus {
        let w = self.width;
        let start = self.iterations;
        self.degenerate_run = 0;
        loop {
            if let Some(s) = self.budget_exhausted(start, deadline) {
                return s;
            }
            let bland = self.degenerate_run > BLAND_AFTER;

            let mut entering: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..w {
                if self.is_fixed(j) {
                    continue;
                }
                let dj = self.d[j];
                let dir = match self.pos[j] {
                    Pos::Basic(_) => continue,
                    Pos::Lower if dj < -DUAL_TOL => 1.0,
                    Pos::Upper if dj > DUAL_TOL => -1.0,
                    Pos::Zero if dj.abs() > DUAL_TOL => -dj.signum(),
                    _ => continue,
                };
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    entering = Some((j, dir));
                }
            }
            let Some((q, dir)) = entering else {
                return LpStatus::Optimal;
            };

            let flip = self.hi[q] - self.lo[q];
            let mut bound = flip;
            for i in 0..self.m {
                let a = dir * self.tab[i * w + q];
                let b = self.basis[i];
                if a > PIVOT_TOL && self.lo[b].is_finite() {
                    bound = bound.min((self.beta[i] - self.lo[b] + PRIMAL_TOL) / a);
                } else if a < -PIVOT_TOL && self.hi[b].is_finite() {
                    bound = bound.min((self.hi[b] + PRIMAL_TOL - self.beta[i]) / -a);
                }
            }
            if bound == f64::INFINITY {
                return LpStatus::Unbounded;
            }

            let mut leave: Option<(usize, f64)> = None;
            let mut leave_key = 0.0;
            for i in 0..self.m {
                let a = dir * self.tab[i * w + q];
                let b = self.basis[i];
                let ratio = if a > PIVOT_TOL && self.lo[b].is_finite() {
                    (self.beta[i] - self.lo[b]) / a
                } else if a < -PIVOT_TOL && self.hi[b].is_finite() {
                    (self.hi[b] - self.beta[i]) / -a
                } else {
                    continue;
                };
                if ratio > bound {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((r, best_ratio)) => {
                        if bland {
                            ratio < best_ratio - PRIMAL_TOL
                                || (ratio <= best_ratio + PRIMAL_TOL && b < self.basis[r])
                        } else {
                            a.abs() > leave_key
                        }
                    }
                };
                if better {
                    leave = Some((i, ratio));
                    leave_key = a.abs();
                }
            }

            let step = match leave {
                Some((_, ratio)) if ratio < flip => ratio.max(0.0),
                _ => flip,
            };
            if step <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            let delta = dir * step;
            for i in 0..self.m {
                let a = self.tab[i * w + q];
                if a != 0.0 {
                    self.beta[i] -= a * delta;
                }
            }
            self.iterations += 1;

            match leave {
                Some((r, ratio)) if ratio < flip => {
                    let b = self.basis[r];
                    let a = dir * self.tab[r * w + q];
                    let (p, v) = if a > 0.0 {
                        (Pos::Lower, self.lo[b])
                    } else {
                        (Pos::Upper, self.hi[b])
                    };
                    let entering_value = self.x[q] + delta;
                    self.pos[b] = p;
                    self.x[b] = v;
                    self.beta[r] = entering_value;
                    self.pivot(r, q);
                }
                _ => {
                    // bound flip, no basis change
                    if dir > 0.0 {
                        self.pos[q] = Pos::Upper;
                        self.x[q] = self.hi[q];
                    } else {
                        self.pos[q] = Pos::Lower;
                        self.x[q] = self.lo[q];
                    }
                }
            }
        }
    }

    fn dual(&mut self, deadline: Option<Instant>) -> LpStatus {
        let w = self.width;
        let start = self.iterations;
        self.degenerate_run = 0;
        loop {
            if let Some(s) = self.budget_exhausted(start, deadline) {
                return s;
            }
            let bland = self.degenerate_run > BLAND_AFTER;

            let mut leaving: Option<usize> = None;
            let mut worst = 0.0;
            for i in 0..self.m {
                let b = self.basis[i];
                let infeas = if self.beta[i] < self.lo[b] - PRIMAL_TOL {
                    self.lo[b] - self.beta[i]
                } else if self.beta[i] > self.hi[b] + PRIMAL_TOL {
                    self.beta[i] - self.hi[b]
                } else {
                    continue;
                };
                let better = match leaving {
                    None => true,
                    Some(r) if bland => b < self.basis[r],
                    Some(_) => infeas > worst,
                };
                if better {
                    worst = infeas;
                    leaving = Some(i);
                }
            }
            let Some(r) = leaving else {
                return LpStatus::Optimal;
            };
            let b = self.basis[r];
            let increase = self.beta[r] < self.lo[b];
            let target = if increase { self.lo[b] } else { self.hi[b] };
            // x_b moves by -alpha_rj * dx_j; sign wanted for dx_j given alpha
            let want = if increase { -1.0 } else { 1.0 };

            let row = r * w;
            let mut bound = f64::INFINITY;
            for j in 0..w {
                let a = self.tab[row + j];
                if a.abs() <= PIVOT_TOL || !self.dual_eligible(j, want * a) {
                    continue;
                }
                bound = bound.min((self.d[j].abs() + DUAL_TOL) / a.abs());
            }
            if bound == f64::INFINITY {
                return LpStatus::Infeasible;
            }
            let mut entering: Option<usize> = None;
            let mut key = 0.0;
            for j in 0..w {
                let a = self.tab[row + j];
                if a.abs() <= PIVOT_TOL || !self.dual_eligible(j, want * a) {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                if ratio > bound {
                    continue;
                }
                let better = match entering {
                    None => true,
                    Some(_) if bland => false,
                    Some(_) => a.abs() > key,
                };
                if better {
                    key = a.abs();
                    entering = Some(j);
                }
            }
            let q = entering.expect("bound finite implies a candidate");
            let alpha = self.tab[row + q];
            let delta = (self.beta[r] - target) / alpha;
            if (self.d[q] * delta).abs() <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            for i in 0..self.m {
                let a = self.tab[i * w + q];
                if a != 0.0 {
                    self.beta[i] -= a * delta;
                }
            }
            let entering_value = self.x[q] + delta;
            self.pos[b] = if increase { Pos::Lower } else { Pos::Upper };
            self.x[b] = target;
            self.beta[r] = entering_value;
            self.iterations += 1;
            self.pivot(r, q);
        }
    }

    /// Whether nonbasic column `j` may move in the direction `sign(dir)`.
    fn dual_eligible(&self, j: usize, dir: f64) -> bool {
        if self.is_fixed(j) {
            return false;
        }
        match self.pos[j] {
            Pos::Basic(_) => false,
            Pos::Lower => dir > 0.0,
            Pos::Upper => dir < 0.0,
            Pos::Zero => true,
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let piv = self.tab[r * w + q];
        let mut prow: Vec<(usize, f64)> = Vec::new();
        {
            let row = &mut self.tab[r * w..(r + 1) * w];
            for (k, v) in row.iter_mut().enumerate() {
                if *v == 0.0 {
                    continue;
                }
                *v /= piv;
                if v.abs() < DROP_TOL {
                    *v = 0.0;
                } else {
                    prow.push((k, *v));
                }
            }
            row[q] = 1.0;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * w..(i + 1) * w];
            for &(k, v) in &prow {
                row[k] -= f * v;
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &(k, v) in &prow {
                self.d[k] -= f * v;
            }
            self.d[q] = 0.0;
        }
        let old = self.basis[r];
        if let Pos::Basic(_) = self.pos[old] {
            // caller has already repositioned the leaving column
            self.pos[old] = Pos::Lower;
        }
        self.basis[r] = q;
        self.pos[q] = Pos::Basic(r);
        self.since_refactor += 1;
    }

    /// Recomputes `B^-1 [A | I]`, basic values and reduced costs from the
    /// original scaled rows by Gauss-Jordan elimination with partial
    /// pivoting over the current basic columns. Numerically dependent
    /// columns are swapped for slacks; returns whether that happened, in
    /// which case the basis may be neither primal nor dual feasible and a
    /// fresh start is usually cheaper than repairing it.
    pub(crate) fn refactor(&mut self) -> Result<bool, String> {
        let w = self.width;
        let m = self.m;
        let mut t = vec![0.0; m * w];
        for i in 0..m {
            for &(j, a) in &self.rows[i] {
                t[i * w + j] = a;
            }
            t[i * w + self.n + i] = 1.0;
        }
        let mut assigned = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        let mut order = self.basis.clone();
        order.sort_unstable();
        let mut dropped = Vec::new();
        for &col in &order {
            let mut best = None;
            let mut best_abs = 1e-11;
            for i in 0..m {
                if !assigned[i] && t[i * w + col].abs() > best_abs {
                    best_abs = t[i * w + col].abs();
                    best = Some(i);
                }
            }
            let Some(r) = best else {
                dropped.push(col);
                continue;
            };
            assigned[r] = true;
            new_basis[r] = col;
            eliminate(&mut t, m, w, r, col);
        }
        // Dependent columns leave; slacks of the uncovered rows take their
        // place. [A | I] has full row rank, so a slack pivot always exists.
        let mut taken = vec![false; w];
        for &k in order.iter().chain(new_basis.iter().filter(|&&k| k != usize::MAX)) {
            taken[k] = true;
        }
        for _ in 0..dropped.len() {
            let mut best = None;
            let mut best_abs = 0.0;
            for i in (0..m).filter(|&i| !assigned[i]) {
                for k in (self.n..w).filter(|&k| !taken[k]) {
                    let a = t[i * w + k].abs();
                    if a > best_abs {
                        best_abs = a;
                        best = Some((i, k));
                    }
                }
            }
            let Some((r, k)) = best else {
                return Err("basis repair found no slack pivot".into());
            };
            assigned[r] = true;
            taken[k] = true;
            new_basis[r] = k;
            eliminate(&mut t, m, w, r, k);
        }
        self.tab = t;
        self.basis = new_basis;
        for j in 0..w {
            if let Pos::Basic(_) = self.pos[j] {
                self.pos[j] = Pos::Lower;
            }
        }
        for &j in &dropped {
            let (pos, x) = park(0.0, self.lo[j], self.hi[j]);
            self.pos[j] = pos;
            self.x[j] = x;
        }
        for (i, &b) in self.basis.iter().enumerate() {
            self.pos[b] = Pos::Basic(i);
        }
        // residual right-hand side b - N x_N, then beta = B^-1 (that)
        let mut resid = self.rhs.clone();
        for (i, r) in resid.iter_mut().enumerate() {
            for &(j, a) in &self.rows[i] {
                if !matches!(self.pos[j], Pos::Basic(_)) {
                    *r -= a * self.x[j];
                }
            }
            let s = self.n + i;
            if !matches!(self.pos[s], Pos::Basic(_)) {
                *r -= self.x[s];
            }
        }
        for i in 0..m {
            let row = &self.tab[i * w + self.n..i * w + self.n + m];
            self.beta[i] = row.iter().zip(&resid).map(|(a, b)| a * b).sum();
        }
        self.recompute_reduced_costs();
        self.since_refactor = 0;
        if !dropped.is_empty() {
            debug!("refactor replaced {} dependent basic columns", dropped.len());
        }
        Ok(!dropped.is_empty())
    }
}

/// Scales row `r` of the `m x w` tableau so that column `col` has a unit
/// pivot, then clears `col` from every other row.
fn eliminate(t: &mut [f64], m: usize, w: usize, r: usize, col: usize) {
    let piv = t[r * w + col];
    let mut prow = Vec::new();
    for k in 0..w {
        let v = t[r * w + k];
        if v != 0.0 {
            let v = v / piv;
            t[r * w + k] = v;
            prow.push((k, v));
        }
    }
    t[r * w + col] = 1.0;
    for i in 0..m {
        if i == r {
            continue;
        }
        let f = t[i * w + col];
        if f == 0.0 {
            continue;
        }
        for &(k, v) in &prow {
            t[i * w + k] -= f * v;
        }
        t[i * w + col] = 0.0;
    }
}

/// Nonbasic resting place for a column given its (reduced) cost.
fn park(cost: f64, lo: f64, hi: f64) -> (Pos, f64) {
    if cost >= 0.0 && lo.is_finite() {
        (Pos::Lower, lo)
    } else if cost <= 0.0 && hi.is_finite() {
        (Pos::Upper, hi)
    } else if lo.is_finite() {
        (Pos::Lower, lo)
    } else if hi.is_finite() {
        (Pos::Upper, hi)
    } else {
        (Pos::Zero, 0.0)
    }
}
