//! LP-based branch-and-bound over the binary variables of a [`MilpModel`].
//!
//! Nodes are explored depth first until the first incumbent is found, then in
//! best-bound order (ties: deeper first, then creation order). Each node fixes
//! a set of binaries, propagates activity bounds over all rows, substitutes
//! fixed variables out and drops rows that the remaining bounds already
//! satisfy before solving the LP relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::model::{relative_gap, MilpModel, Relation, SolveResult, SolveStatus, VarKind};
use super::simplex::{solve_lp, LpOutcome, LpProblem, LpRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Wall-clock budget in seconds.
    pub time_limit: f64,
    pub node_limit: Option<u64>,
    pub int_tol: f64,
    pub feas_tol: f64,
    /// Relative optimality gap at which a node is pruned.
    pub gap_tol: f64,
    /// Round-and-repair incumbent heuristic.
    pub heuristic: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit: 300.0,
            node_limit: None,
            int_tol: 1e-6,
            feas_tol: 1e-6,
            gap_tol: 1e-6,
            heuristic: true,
        }
    }
}

impl SolveOptions {
    pub fn with_time_limit(time_limit: f64) -> Self {
        Self { time_limit, ..Self::default() }
    }
}

/// Solves `model` to proven optimality or until `time_limit` seconds elapse.
pub fn solve(model: &MilpModel, time_limit: f64) -> Result<SolveResult> {
    solve_with(model, &SolveOptions::with_time_limit(time_limit))
}

pub fn solve_with(model: &MilpModel, opts: &SolveOptions) -> Result<SolveResult> {
    model.validate()?;
    if opts.time_limit.is_nan() || opts.time_limit <= 0.0 {
        return Err(Error::InvalidInput("time limit must be positive".into()));
    }
    let mut search = Search::new(model, opts);
    search.run()
}

struct Row {
    coefs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    depth: u32,
    id: u64,
    fixings: Vec<(u32, bool)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: the "greatest" node is the lowest bound, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.depth.cmp(&other.depth)).then(other.id.cmp(&self.id))
    }
}

enum Frontier {
    Dive(Vec<Node>),
    Best(BinaryHeap<Node>),
}

impl Frontier {
    fn pop(&mut self) -> Option<Node> {
        match self {
            Frontier::Dive(stack) => stack.pop(),
            Frontier::Best(heap) => heap.pop(),
        }
    }

    fn min_bound(&self) -> f64 {
        let iter: Box<dyn Iterator<Item = &Node>> = match self {
            Frontier::Dive(stack) => Box::new(stack.iter()),
            Frontier::Best(heap) => Box::new(heap.iter()),
        };
        iter.map(|n| n.bound).fold(f64::INFINITY, f64::min)
    }

    fn switch_to_best_bound(&mut self) {
        if let Frontier::Dive(stack) = self {
            let heap = std::mem::take(stack).into_iter().collect();
            *self = Frontier::Best(heap);
        }
    }
}

enum NodeLp {
    Infeasible,
    Solved { x: Vec<f64>, objective: f64 },
    Aborted,
}

struct Search<'a> {
    model: &'a MilpModel,
    opts: &'a SolveOptions,
    rows: Vec<Row>,
    cost: Vec<f64>,
    root_lo: Vec<f64>,
    root_hi: Vec<f64>,
    binary: Vec<bool>,
    /// Row indices touching each variable.
    var_rows: Vec<Vec<usize>>,
    start: Instant,
    deadline: Instant,
    incumbent: Option<Vec<f64>>,
    incumbent_obj: f64,
    nodes: u64,
    next_id: u64,
}

impl<'a> Search<'a> {
    fn new(model: &'a MilpModel, opts: &'a SolveOptions) -> Self {
        let n = model.num_vars();
        let rows: Vec<Row> = model
            .constraints
            .iter()
            .map(|c| {
                let e = c.expr.normalized();
                Row {
                    coefs: e.terms.iter().map(|&(v, a)| (v.0, a)).collect(),
                    relation: c.relation,
                    rhs: c.rhs,
                }
            })
            .collect();
        let mut cost = vec![0.0; n];
        for &(v, a) in &model.objective.terms {
            cost[v.0] += a;
        }
        let mut var_rows = vec![Vec::new(); n];
        for (i, r) in rows.iter().enumerate() {
            for &(j, _) in &r.coefs {
                var_rows[j].push(i);
            }
        }
        let start = Instant::now();
        let deadline = start + Duration::from_secs_f64(opts.time_limit.min(1e9));
        Self {
            model,
            opts,
            rows,
            cost,
            root_lo: model.variables.iter().map(|v| v.lower).collect(),
            root_hi: model.variables.iter().map(|v| v.upper).collect(),
            binary: model.variables.iter().map(|v| v.kind == VarKind::Binary).collect(),
            var_rows,
            start,
            deadline,
            incumbent: None,
            incumbent_obj: f64::INFINITY,
            nodes: 0,
            next_id: 0,
        }
    }

    fn prune_threshold(&self) -> f64 {
        if self.incumbent.is_none() {
            return f64::INFINITY;
        }
        let slack = (self.opts.gap_tol * self.incumbent_obj.abs()).max(1e-9);
        self.incumbent_obj - slack
    }

    fn out_of_budget(&self) -> bool {
        if let Some(limit) = self.opts.node_limit {
            if self.nodes >= limit {
                return true;
            }
        }
        Instant::now() >= self.deadline
    }

    fn run(&mut self) -> Result<SolveResult> {
        let root = Node { bound: f64::NEG_INFINITY, depth: 0, id: 0, fixings: Vec::new() };
        self.next_id = 1;
        let mut frontier = Frontier::Dive(vec![root]);
        let mut timed_out_bound: Option<f64> = None;

        while let Some(node) = frontier.pop() {
            if node.bound >= self.prune_threshold() {
                continue;
            }
            if self.out_of_budget() {
                timed_out_bound = Some(node.bound.min(frontier.min_bound()));
                break;
            }
            self.nodes += 1;

            let Some((lo, hi)) = self.node_bounds(&node.fixings) else {
                continue;
            };
            let (x, objective) = match self.solve_node_lp(&lo, &hi)? {
                NodeLp::Infeasible => continue,
                NodeLp::Aborted => {
                    if self.out_of_budget() {
                        timed_out_bound = Some(node.bound.min(frontier.min_bound()));
                        break;
                    }
                    // Numerical trouble: branch blindly on the first free binary.
                    let free = (0..lo.len()).find(|&j| self.binary[j] && lo[j] != hi[j]);
                    match free {
                        Some(j) => {
                            self.push_children(&mut frontier, &node, j, 0.0, node.bound);
                            continue;
                        }
                        None => continue,
                    }
                }
                NodeLp::Solved { x, objective } => (x, objective),
            };
            if objective >= self.prune_threshold() {
                continue;
            }

            match self.most_fractional(&x) {
                None => {
                    if self.try_incumbent(x) {
                        frontier.switch_to_best_bound();
                    }
                }
                Some(j) => {
                    if self.opts.heuristic
                        && (self.incumbent.is_none() && (self.nodes == 1 || self.nodes.is_multiple_of(64)))
                        && self.round_and_repair(&x, &lo, &hi)?
                    {
                        frontier.switch_to_best_bound();
                        if objective >= self.prune_threshold() {
                            continue;
                        }
                    }
                    self.push_children(&mut frontier, &node, j, x[j], objective);
                }
            }
        }

        let wall_time = self.start.elapsed().as_secs_f64();
        let (status, best_bound) = match (timed_out_bound, &self.incumbent) {
            (None, Some(_)) => (SolveStatus::Optimal, self.incumbent_obj),
            (None, None) => (SolveStatus::Infeasible, f64::INFINITY),
            (Some(b), Some(_)) => (SolveStatus::TimeLimit, b.min(self.incumbent_obj)),
            (Some(b), None) => (SolveStatus::TimeLimit, b),
        };
        let (objective, gap) = match &self.incumbent {
            Some(_) => (self.incumbent_obj, relative_gap(self.incumbent_obj, best_bound)),
            None => (f64::INFINITY, f64::INFINITY),
        };
        // A fully explored tree closes the gap up to the pruning tolerance.
        let gap = if status == SolveStatus::Optimal { gap.min(self.opts.gap_tol) } else { gap };
        Ok(SolveResult {
            status,
            assignment: self.incumbent.clone(),
            objective,
            best_bound,
            gap,
            nodes: self.nodes,
            wall_time,
        })
    }

    fn push_children(&mut self, frontier: &mut Frontier, node: &Node, j: usize, value: f64, bound: f64) {
        let first = value >= 0.5;
        // Pushed last is explored first when diving.
        for fix in [!first, first] {
            let mut fixings = node.fixings.clone();
            fixings.push((j as u32, fix));
            let child = Node { bound, depth: node.depth + 1, id: self.next_id, fixings };
            self.next_id += 1;
            match frontier {
                Frontier::Dive(stack) => stack.push(child),
                Frontier::Best(heap) => heap.push(child),
            }
        }
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, &v) in x.iter().enumerate() {
            if !self.binary[j] {
                continue;
            }
            let frac = v - v.floor();
            let dist = frac.min(1.0 - frac);
            if dist > self.opts.int_tol && best.is_none_or(|(_, d)| dist > d + 1e-12) {
                best = Some((j, dist));
            }
        }
        best.map(|(j, _)| j)
    }

    fn node_bounds(&self, fixings: &[(u32, bool)]) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = self.root_lo.clone();
        let mut hi = self.root_hi.clone();
        for &(j, v) in fixings {
            let v = if v { 1.0 } else { 0.0 };
            lo[j as usize] = v;
            hi[j as usize] = v;
        }
        if self.propagate(&mut lo, &mut hi) {
            Some((lo, hi))
        } else {
            None
        }
    }

    /// Activity-bound propagation. Returns false when the bounds are proven inconsistent.
    fn propagate(&self, lo: &mut [f64], hi: &mut [f64]) -> bool {
        let tol = self.opts.feas_tol;
        let mut queue: Vec<usize> = (0..self.rows.len()).collect();
        let mut queued = vec![true; self.rows.len()];
        let mut budget = 20 * self.rows.len() + 100;
        while let Some(ri) = queue.pop() {
            queued[ri] = false;
            if budget == 0 {
                break;
            }
            budget -= 1;
            let row = &self.rows[ri];
            // Handle `<=` sides; a `>=` side is the `<=` of the negated row.
            let sides: &[f64] = match row.relation {
                Relation::Le => &[1.0],
                Relation::Ge => &[-1.0],
                Relation::Eq => &[1.0, -1.0],
            };
            for &sign in sides {
                let rhs = sign * row.rhs;
                let mut min_act = 0.0;
                let mut inf_count = 0usize;
                for &(j, a) in &row.coefs {
                    let a = sign * a;
                    let b = if a > 0.0 { lo[j] } else { hi[j] };
                    if b.is_infinite() {
                        inf_count += 1;
                    } else {
                        min_act += a * b;
                    }
                }
                if inf_count == 0 && min_act > rhs + tol * (1.0 + rhs.abs()) {
                    return false;
                }
                if inf_count > 1 {
                    continue;
                }
                for &(j, a) in &row.coefs {
                    let a = sign * a;
                    let own = if a > 0.0 { lo[j] } else { hi[j] };
                    let residual = if own.is_infinite() {
                        min_act
                    } else if inf_count == 0 {
                        min_act - a * own
                    } else {
                        continue;
                    };
                    let limit = (rhs - residual) / a;
                    let changed = if a > 0.0 {
                        // x_j <= limit
                        let new_hi = if self.binary[j] {
                            if limit < 1.0 - self.opts.int_tol {
                                (limit + self.opts.int_tol).floor()
                            } else {
                                hi[j]
                            }
                        } else {
                            limit + 1e-9 * (1.0 + limit.abs())
                        };
                        if new_hi < hi[j] - 1e-7 * (1.0 + hi[j].abs().min(1e12)) {
                            hi[j] = new_hi;
                            true
                        } else {
                            false
                        }
                    } else {
                        // x_j >= limit
                        let new_lo = if self.binary[j] {
                            if limit > self.opts.int_tol {
                                (limit - self.opts.int_tol).ceil()
                            } else {
                                lo[j]
                            }
                        } else {
                            limit - 1e-9 * (1.0 + limit.abs())
                        };
                        if new_lo > lo[j] + 1e-7 * (1.0 + lo[j].abs().min(1e12)) {
                            lo[j] = new_lo;
                            true
                        } else {
                            false
                        }
                    };
                    if changed {
                        if lo[j] > hi[j] + tol {
                            return false;
                        }
                        if lo[j] > hi[j] {
                            hi[j] = lo[j];
                        }
                        for &other in &self.var_rows[j] {
                            if !queued[other] {
                                queued[other] = true;
                                queue.push(other);
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Builds the reduced LP (fixed columns substituted, redundant rows dropped) and solves it.
    fn solve_node_lp(&self, lo: &[f64], hi: &[f64]) -> Result<NodeLp> {
        let n = lo.len();
        let tol = self.opts.feas_tol;
        let mut col_of = vec![usize::MAX; n];
        let mut problem = LpProblem::default();
        let mut free_vars = Vec::new();
        let mut fixed_obj = 0.0;
        for j in 0..n {
            if lo[j] == hi[j] {
                fixed_obj += self.cost[j] * lo[j];
            } else {
                col_of[j] = free_vars.len();
                free_vars.push(j);
                problem.cost.push(self.cost[j]);
                problem.lower.push(lo[j]);
                problem.upper.push(hi[j]);
            }
        }
        for row in &self.rows {
            let mut rhs = row.rhs;
            let mut coefs = Vec::new();
            let (mut min_act, mut max_act) = (0.0f64, 0.0f64);
            for &(j, a) in &row.coefs {
                if col_of[j] == usize::MAX {
                    rhs -= a * lo[j];
                } else {
                    coefs.push((col_of[j], a));
                    let (l, h) = (lo[j], hi[j]);
                    if a > 0.0 {
                        min_act += a * l;
                        max_act += a * h;
                    } else {
                        min_act += a * h;
                        max_act += a * l;
                    }
                }
            }
            let scale = tol * (1.0 + rhs.abs());
            let redundant = match row.relation {
                Relation::Le => max_act <= rhs,
                Relation::Ge => min_act >= rhs,
                Relation::Eq => coefs.is_empty() && rhs.abs() <= scale,
            };
            if coefs.is_empty() {
                let ok = match row.relation {
                    Relation::Le => 0.0 <= rhs + scale,
                    Relation::Ge => 0.0 >= rhs - scale,
                    Relation::Eq => rhs.abs() <= scale,
                };
                if !ok {
                    return Ok(NodeLp::Infeasible);
                }
                continue;
            }
            if redundant {
                continue;
            }
            problem.rows.push(LpRow { coefs, relation: row.relation, rhs });
        }

        let (reduced, lp_obj) = if problem.cost.is_empty() {
            (Vec::new(), 0.0)
        } else {
            match solve_lp(&problem, Some(self.deadline)) {
                LpOutcome::Optimal { x, objective } => (x, objective),
                LpOutcome::Infeasible => return Ok(NodeLp::Infeasible),
                LpOutcome::Unbounded => return Err(Error::Unbounded),
                LpOutcome::Aborted => return Ok(NodeLp::Aborted),
            }
        };
        let mut x = lo.to_vec();
        for (c, &j) in free_vars.iter().enumerate() {
            x[j] = reduced[c];
        }
        Ok(NodeLp::Solved { x, objective: fixed_obj + lp_obj })
    }

    /// Accepts an integral LP point as incumbent if it is feasible and improving.
    fn try_incumbent(&mut self, mut x: Vec<f64>) -> bool {
        for (j, v) in x.iter_mut().enumerate() {
            if self.binary[j] {
                *v = v.round();
            }
        }
        if self.model.first_violation(&x, self.opts.feas_tol).is_some() {
            return false;
        }
        let obj = self.model.objective_value(&x);
        if obj < self.incumbent_obj {
            self.incumbent_obj = obj;
            self.incumbent = Some(x);
            true
        } else {
            false
        }
    }

    fn round_and_repair(&mut self, x: &[f64], lo: &[f64], hi: &[f64]) -> Result<bool> {
        let mut rlo = lo.to_vec();
        let mut rhi = hi.to_vec();
        for j in 0..x.len() {
            if self.binary[j] && rlo[j] != rhi[j] {
                let v = x[j].round();
                rlo[j] = v;
                rhi[j] = v;
            }
        }
        if !self.propagate(&mut rlo, &mut rhi) {
            return Ok(false);
        }
        match self.solve_node_lp(&rlo, &rhi)? {
            NodeLp::Solved { x, .. } => Ok(self.try_incumbent(x)),
            _ => Ok(false),
        }
    }
}
