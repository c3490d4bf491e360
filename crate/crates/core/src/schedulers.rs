//! ILP formulations of the four schedulers and schedule extraction.
//!
//! Variable layout (all schedulers share the `x` block at the front):
//!
//! * `x[a][j][k]`: task `j` uses allocation `a` at level `k`. For
//!   `Unrestricted`/`AllocPow2`, `a` is a width minus one (`1..=p`); for
//!   `Group`/`Crown`, `a` is a core-group index.
//! * `z[c][j][k]`: task `j` runs on core `c` at level `k` (width-based kinds only).
//! * `y[j][j']`: task `j` precedes task `j'` (all kinds except `Crown`).
//! * `s[j]`, `e[j]`: start and end time (all kinds except `Crown`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{self, LinExpr, MilpModel, Relation, SolveResult, VarId};
use crate::taskmodel::{build_groups, energy, offspring, CoreGroup, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Unrestricted,
    AllocPow2,
    Group,
    Crown,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] =
        [SchedulerKind::Unrestricted, SchedulerKind::AllocPow2, SchedulerKind::Group, SchedulerKind::Crown];

    pub fn as_str(&self) -> &'static str {
        match self {
            SchedulerKind::Unrestricted => "unrestricted",
            SchedulerKind::AllocPow2 => "allocpow2",
            SchedulerKind::Group => "group",
            SchedulerKind::Crown => "crown",
        }
    }

    pub fn uses_groups(&self) -> bool {
        matches!(self, SchedulerKind::Group | SchedulerKind::Crown)
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown scheduler `{s}`")))
    }
}

/// Index arithmetic for the variables of a scheduler model.
#[derive(Debug, Clone, Copy)]
pub struct VarLayout {
    pub kind: SchedulerKind,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    /// Number of allocation choices: `p` widths or `2p - 1` groups.
    pub allocs: usize,
    z_base: usize,
    y_base: usize,
    s_base: usize,
    e_base: usize,
    total: usize,
}

impl VarLayout {
    pub fn new(kind: SchedulerKind, n: usize, p: usize, k: usize) -> Self {
        let allocs = if kind.uses_groups() { 2 * p - 1 } else { p };
        let x_len = allocs * n * k;
        let z_len = if kind.uses_groups() { 0 } else { p * n * k };
        let ordered = kind != SchedulerKind::Crown;
        let z_base = x_len;
        let y_base = z_base + z_len;
        let y_len = if ordered { n * n } else { 0 };
        let s_base = y_base + y_len;
        let e_base = s_base + if ordered { n } else { 0 };
        let total = e_base + if ordered { n } else { 0 };
        Self { kind, n, p, k, allocs, z_base, y_base, s_base, e_base, total }
    }

    pub fn x(&self, alloc: usize, j: usize, k: usize) -> VarId {
        VarId((alloc * self.n + j) * self.k + k)
    }

    pub fn z(&self, core: usize, j: usize, k: usize) -> VarId {
        debug_assert!(!self.kind.uses_groups());
        VarId(self.z_base + (core * self.n + j) * self.k + k)
    }

    pub fn y(&self, j: usize, j2: usize) -> VarId {
        debug_assert!(self.kind != SchedulerKind::Crown);
        VarId(self.y_base + j * self.n + j2)
    }

    pub fn s(&self, j: usize) -> VarId {
        VarId(self.s_base + j)
    }

    pub fn e(&self, j: usize) -> VarId {
        VarId(self.e_base + j)
    }

    pub fn num_vars(&self) -> usize {
        self.total
    }
}

/// A scheduler model plus the layout needed to read its solutions.
#[derive(Debug, Clone)]
pub struct BuiltModel {
    pub kind: SchedulerKind,
    pub model: MilpModel,
    pub layout: VarLayout,
}

/// Allocation (in cores) of each allocation index.
fn alloc_sizes(kind: SchedulerKind, p: u32, groups: &[CoreGroup]) -> Vec<u32> {
    if kind.uses_groups() {
        groups.iter().map(|g| g.size).collect()
    } else {
        (1..=p).collect()
    }
}

pub fn build_model(inst: &ProblemInstance, kind: SchedulerKind) -> Result<BuiltModel> {
    let n = inst.n();
    let p = inst.p();
    let levels = inst.k();
    let groups = if kind.uses_groups() { build_groups(p)? } else { Vec::new() };
    let layout = VarLayout::new(kind, n, p as usize, levels);
    let sizes = alloc_sizes(kind, p, &groups);
    let m = inst.deadline;
    let tasks = &inst.tasks.tasks;
    let machine = &inst.machine;

    let mut model = MilpModel::new();
    let alloc_tag = if kind.uses_groups() { "g" } else { "w" };
    for (a, &size) in sizes.iter().enumerate() {
        let label = if kind.uses_groups() { a as u32 } else { size };
        for j in 0..n {
            for k in 0..levels {
                let id = model.add_binary(format!("x_{alloc_tag}{label}_t{j}_k{k}"));
                debug_assert_eq!(id, layout.x(a, j, k));
            }
        }
    }
    if !kind.uses_groups() {
        for c in 0..p as usize {
            for j in 0..n {
                for k in 0..levels {
                    let id = model.add_binary(format!("z_c{c}_t{j}_k{k}"));
                    debug_assert_eq!(id, layout.z(c, j, k));
                }
            }
        }
    }
    if kind != SchedulerKind::Crown {
        for j in 0..n {
            for j2 in 0..n {
                let id = model.add_binary(format!("y_t{j}_t{j2}"));
                debug_assert_eq!(id, layout.y(j, j2));
            }
        }
        for j in 0..n {
            model.add_continuous(format!("s_t{j}"), 0.0, m);
        }
        for j in 0..n {
            model.add_continuous(format!("e_t{j}"), 0.0, m);
        }
    }
    debug_assert_eq!(model.num_vars(), layout.num_vars());

    let runtime = |j: usize, a: usize, k: usize| tasks[j].runtime(sizes[a], machine.freq(k));

    // Objective: total energy.
    let mut obj = LinExpr::new();
    for (a, &size) in sizes.iter().enumerate() {
        for (j, task) in tasks.iter().enumerate() {
            for k in 0..levels {
                obj.add(layout.x(a, j, k), energy(task, size, k, machine));
            }
        }
    }
    model.set_objective(obj);

    // Each task is scheduled exactly once.
    for j in 0..n {
        let expr: LinExpr =
            (0..sizes.len()).flat_map(|a| (0..levels).map(move |k| (layout.x(a, j, k), 1.0))).collect();
        model.add_named_constraint(format!("assign_t{j}"), expr, Relation::Eq, 1.0);
    }

    if kind == SchedulerKind::Crown {
        // No group larger than the task's maximum width.
        for (j, task) in tasks.iter().enumerate() {
            let banned: Vec<usize> = (0..sizes.len()).filter(|&a| sizes[a] > task.max_width).collect();
            if banned.is_empty() {
                continue;
            }
            let expr: LinExpr =
                banned.iter().flat_map(|&a| (0..levels).map(move |k| (layout.x(a, j, k), 1.0))).collect();
            model.add_named_constraint(format!("maxwidth_t{j}"), expr, Relation::Eq, 0.0);
        }
        // Per-core accumulated runtime within the deadline.
        for l in 0..p {
            let mut expr = LinExpr::new();
            for g in groups.iter().filter(|g| g.contains(l)) {
                for j in 0..n {
                    for k in 0..levels {
                        expr.add(layout.x(g.index, j, k), runtime(j, g.index, k));
                    }
                }
            }
            model.add_named_constraint(format!("load_c{l}"), expr, Relation::Le, m);
        }
        return Ok(BuiltModel { kind, model, layout });
    }

    // e_j = s_j + runtime of the chosen allocation.
    for j in 0..n {
        let mut expr = LinExpr::new().with(layout.e(j), 1.0).with(layout.s(j), -1.0);
        for a in 0..sizes.len() {
            for k in 0..levels {
                expr.add(layout.x(a, j, k), -runtime(j, a, k));
            }
        }
        model.add_named_constraint(format!("end_t{j}"), expr, Relation::Eq, 0.0);
    }
    // No self-precedence.
    for j in 0..n {
        model.add_named_constraint(
            format!("noself_t{j}"),
            LinExpr::new().with(layout.y(j, j), 1.0),
            Relation::Eq,
            0.0,
        );
    }
    // No mutual precedence.
    for j in 0..n {
        for j2 in j + 1..n {
            model.add_named_constraint(
                format!("nomutual_t{j}_t{j2}"),
                LinExpr::new().with(layout.y(j, j2), 1.0).with(layout.y(j2, j), 1.0),
                Relation::Le,
                1.0,
            );
        }
    }
    // s_j >= e_j' - (1 - y_j'j) M
    for j in 0..n {
        for j2 in 0..n {
            if j == j2 {
                continue;
            }
            let expr =
                LinExpr::new().with(layout.s(j), 1.0).with(layout.e(j2), -1.0).with(layout.y(j2, j), -m);
            model.add_named_constraint(format!("order_t{j2}_t{j}"), expr, Relation::Ge, -m);
        }
    }

    match kind {
        SchedulerKind::Unrestricted | SchedulerKind::AllocPow2 => {
            // Tasks sharing a core are ordered one way or the other.
            for j in 0..n {
                for j2 in 0..j {
                    for c in 0..p as usize {
                        let mut expr = LinExpr::new().with(layout.y(j, j2), 1.0).with(layout.y(j2, j), 1.0);
                        for k in 0..levels {
                            expr.add(layout.z(c, j, k), -1.0);
                            expr.add(layout.z(c, j2, k), -1.0);
                        }
                        model.add_named_constraint(
                            format!("share_c{c}_t{j}_t{j2}"),
                            expr,
                            Relation::Ge,
                            -1.0,
                        );
                    }
                }
            }
            // Mapped cores match the allocation at each level.
            for j in 0..n {
                for k in 0..levels {
                    let mut expr = LinExpr::new();
                    for c in 0..p as usize {
                        expr.add(layout.z(c, j, k), 1.0);
                    }
                    for (a, &size) in sizes.iter().enumerate() {
                        expr.add(layout.x(a, j, k), -(size as f64));
                    }
                    model.add_named_constraint(format!("map_t{j}_k{k}"), expr, Relation::Eq, 0.0);
                }
            }
            if kind == SchedulerKind::AllocPow2 {
                for j in 0..n {
                    for (a, &size) in sizes.iter().enumerate() {
                        if size.is_power_of_two() {
                            continue;
                        }
                        let expr: LinExpr = (0..levels).map(|k| (layout.x(a, j, k), 1.0)).collect();
                        model.add_named_constraint(format!("pow2_w{size}_t{j}"), expr, Relation::Eq, 0.0);
                    }
                }
            }
        }
        SchedulerKind::Group => {
            // Ordering whenever one task's group contains the other's, in both directions.
            let nested: Vec<Vec<usize>> = (0..sizes.len()).map(|i| offspring(i, p)).collect::<Result<_>>()?;
            for j in 0..n {
                for j2 in 0..n {
                    if j == j2 {
                        continue;
                    }
                    for (i, sub) in nested.iter().enumerate() {
                        let mut expr = LinExpr::new().with(layout.y(j, j2), 1.0).with(layout.y(j2, j), 1.0);
                        for k in 0..levels {
                            expr.add(layout.x(i, j, k), -1.0);
                        }
                        for &g in sub {
                            for k in 0..levels {
                                expr.add(layout.x(g, j2, k), -1.0);
                            }
                        }
                        model.add_named_constraint(format!("nest_g{i}_t{j}_t{j2}"), expr, Relation::Ge, -1.0);
                    }
                }
            }
        }
        SchedulerKind::Crown => unreachable!(),
    }

    Ok(BuiltModel { kind, model, layout })
}

pub fn build_unrestricted(inst: &ProblemInstance) -> Result<MilpModel> {
    build_model(inst, SchedulerKind::Unrestricted).map(|b| b.model)
}

pub fn build_allocpow2(inst: &ProblemInstance) -> Result<MilpModel> {
    build_model(inst, SchedulerKind::AllocPow2).map(|b| b.model)
}

pub fn build_group(inst: &ProblemInstance) -> Result<MilpModel> {
    build_model(inst, SchedulerKind::Group).map(|b| b.model)
}

pub fn build_crown(inst: &ProblemInstance) -> Result<MilpModel> {
    build_model(inst, SchedulerKind::Crown).map(|b| b.model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub task: usize,
    pub cores: Vec<u32>,
    pub level: usize,
    #[serde(rename = "start_s")]
    pub start: f64,
    #[serde(rename = "end_s")]
    pub end: f64,
}

impl ScheduleEntry {
    pub fn width(&self) -> u32 {
        self.cores.len() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub kind: SchedulerKind,
    #[serde(rename = "deadline_s")]
    pub deadline: f64,
    #[serde(rename = "total_energy_j")]
    pub total_energy: f64,
    pub entries: Vec<ScheduleEntry>,
}

impl Schedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Energy recomputed from the entries.
    pub fn recomputed_energy(&self, inst: &ProblemInstance) -> f64 {
        self.entries
            .iter()
            .map(|e| energy(&inst.tasks.tasks[e.task], e.width(), e.level, &inst.machine))
            .sum()
    }
}

/// Finds the unique `(alloc, level)` whose `x` is set for task `j`.
fn chosen_alloc(layout: &VarLayout, values: &[f64], j: usize) -> Result<(usize, usize)> {
    let mut found = None;
    for a in 0..layout.allocs {
        for k in 0..layout.k {
            if values[layout.x(a, j, k).0] > 0.5 {
                if found.is_some() {
                    return Err(Error::InconsistentAssignment(format!(
                        "task {j} has more than one allocation selected"
                    )));
                }
                found = Some((a, k));
            }
        }
    }
    found.ok_or_else(|| Error::InconsistentAssignment(format!("task {j} has no allocation selected")))
}

/// Turns a solver assignment into a concrete schedule.
///
/// Crown schedules are laid out by processing groups from largest to smallest
/// (ties by group index, then task id) and starting each task at the latest
/// current finish time among its group's cores.
pub fn extract_schedule(
    inst: &ProblemInstance,
    kind: SchedulerKind,
    result: &SolveResult,
) -> Result<Schedule> {
    let values = result.assignment.as_ref().ok_or(Error::NoAssignment)?;
    let n = inst.n();
    let p = inst.p();
    let layout = VarLayout::new(kind, n, p as usize, inst.k());
    if values.len() != layout.num_vars() {
        return Err(Error::InconsistentAssignment(format!(
            "assignment has {} values, {kind} model has {}",
            values.len(),
            layout.num_vars()
        )));
    }
    let groups = if kind.uses_groups() { build_groups(p)? } else { Vec::new() };
    let tasks = &inst.tasks.tasks;

    let mut choices = Vec::with_capacity(n);
    for j in 0..n {
        choices.push(chosen_alloc(&layout, values, j)?);
    }

    let mut entries: Vec<ScheduleEntry> = Vec::with_capacity(n);
    match kind {
        SchedulerKind::Unrestricted | SchedulerKind::AllocPow2 => {
            for (j, &(a, k)) in choices.iter().enumerate() {
                let width = a as u32 + 1;
                let mut cores = Vec::new();
                for c in 0..p as usize {
                    for kk in 0..layout.k {
                        if values[layout.z(c, j, kk).0] > 0.5 {
                            if kk != k {
                                return Err(Error::InconsistentAssignment(format!(
                                    "task {j} mapped to core {c} at level {kk} but allocated at level {k}"
                                )));
                            }
                            cores.push(c as u32);
                        }
                    }
                }
                if cores.len() as u32 != width {
                    return Err(Error::InconsistentAssignment(format!(
                        "task {j}: {} cores mapped for width {width}",
                        cores.len()
                    )));
                }
                let start = values[layout.s(j).0].max(0.0);
                let end = start + tasks[j].runtime(width, inst.machine.freq(k));
                entries.push(ScheduleEntry { task: j, cores, level: k, start, end });
            }
        }
        SchedulerKind::Group => {
            for (j, &(g, k)) in choices.iter().enumerate() {
                let group = groups[g];
                let start = values[layout.s(j).0].max(0.0);
                let end = start + tasks[j].runtime(group.size, inst.machine.freq(k));
                entries.push(ScheduleEntry { task: j, cores: group.cores().collect(), level: k, start, end });
            }
        }
        SchedulerKind::Crown => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&j| {
                let g = groups[choices[j].0];
                (std::cmp::Reverse(g.size), g.index, j)
            });
            let mut frontier = vec![0.0f64; p as usize];
            let mut placed: Vec<Option<ScheduleEntry>> = vec![None; n];
            for j in order {
                let (g, k) = choices[j];
                let group = groups[g];
                let start = group.cores().map(|c| frontier[c as usize]).fold(0.0, f64::max);
                let end = start + tasks[j].runtime(group.size, inst.machine.freq(k));
                for c in group.cores() {
                    frontier[c as usize] = end;
                }
                placed[j] =
                    Some(ScheduleEntry { task: j, cores: group.cores().collect(), level: k, start, end });
            }
            entries.extend(placed.into_iter().flatten());
        }
    }

    let total_energy =
        entries.iter().map(|e| energy(&tasks[e.task], e.width(), e.level, &inst.machine)).sum();
    Ok(Schedule { kind, deadline: inst.deadline, total_energy, entries })
}

/// Builds, solves and (when an incumbent exists) extracts a schedule.
pub fn solve_instance(
    inst: &ProblemInstance,
    kind: SchedulerKind,
    time_limit: f64,
) -> Result<(SolveResult, Option<Schedule>)> {
    solve_instance_with(inst, kind, &milp::SolveOptions::with_time_limit(time_limit))
}

pub fn solve_instance_with(
    inst: &ProblemInstance,
    kind: SchedulerKind,
    opts: &milp::SolveOptions,
) -> Result<(SolveResult, Option<Schedule>)> {
    let built = build_model(inst, kind)?;
    let result = milp::solve_with(&built.model, opts)?;
    let schedule = if result.has_incumbent() { Some(extract_schedule(inst, kind, &result)?) } else { None };
    Ok((result, schedule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{SolveStatus, VarKind};
    use crate::taskmodel::{Machine, TaskSet};

    /// One task (workload 2, max width 2) on 2 cores, levels {1, 2} GHz at {1, 8} W, M = 2 s.
    fn single_task() -> ProblemInstance {
        let tasks = TaskSet::from_pairs(&[(2, 2)]).unwrap();
        let machine = Machine::new(2, vec![1.0, 2.0], vec![1.0, 8.0]).unwrap();
        ProblemInstance::new(tasks, machine, 2.0).unwrap()
    }

    fn instance(pairs: &[(u64, u32)], p: u32, k: usize) -> ProblemInstance {
        let tasks = TaskSet::from_pairs(pairs).unwrap();
        let machine = Machine::evenly_spaced(p, 0.6, 1.6, k).unwrap();
        ProblemInstance::new(tasks, machine, 50.0).unwrap()
    }

    #[test]
    fn unrestricted_variable_count() {
        let pairs: Vec<(u64, u32)> = (0..8).map(|i| (10 + i, 1)).collect();
        let inst = instance(&pairs, 4, 6);
        let m = build_unrestricted(&inst).unwrap();
        assert_eq!(m.num_vars(), 464);
        assert_eq!(m.num_binaries(), 2 * 4 * 8 * 6 + 64);
        assert_eq!(m.num_continuous(), 16);
    }

    #[test]
    fn single_task_model_shape() {
        let inst = single_task();
        let b = build_model(&inst, SchedulerKind::Unrestricted).unwrap();
        let y = b.layout.y(0, 0);
        let noself = b.model.constraints.iter().find(|c| c.name == "noself_t0").unwrap();
        assert_eq!(noself.expr.terms, vec![(y, 1.0)]);
        let assign = b.model.constraints.iter().find(|c| c.name == "assign_t0").unwrap();
        assert_eq!(assign.expr.terms.len(), 2 * 2);
        assert_eq!(assign.rhs, 1.0);
    }

    #[test]
    fn allocpow2_bans_non_powers() {
        let inst = instance(&[(40, 2), (60, 2)], 4, 2);
        let m = build_allocpow2(&inst).unwrap();
        let banned: Vec<&str> =
            m.constraints.iter().filter(|c| c.name.starts_with("pow2_")).map(|c| c.name.as_str()).collect();
        assert_eq!(banned, vec!["pow2_w3_t0", "pow2_w3_t1"]);

        let inst8 = instance(&[(40, 2)], 8, 2);
        let m8 = build_allocpow2(&inst8).unwrap();
        let banned8 = m8.constraints.iter().filter(|c| c.name.starts_with("pow2_")).count();
        assert_eq!(8 - banned8, 4);
    }

    #[test]
    fn group_variable_count_and_pow2_requirement() {
        let inst = instance(&[(40, 2), (60, 2)], 8, 2);
        let m = build_group(&inst).unwrap();
        assert_eq!(m.num_vars(), 68);
        let bad = instance(&[(40, 2)], 3, 2);
        assert!(matches!(build_group(&bad), Err(Error::NotPowerOfTwo(3))));
        assert!(matches!(build_crown(&bad), Err(Error::NotPowerOfTwo(3))));
    }

    #[test]
    fn crown_model_shape() {
        let inst = instance(&[(20, 1)], 2, 2);
        let m = build_crown(&inst).unwrap();
        assert_eq!(m.num_vars(), 6);
        assert!(m.variables.iter().all(|v| v.kind == VarKind::Binary));
        let names: Vec<&str> = m.constraints.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["assign_t0", "maxwidth_t0", "load_c0", "load_c1"]);

        let inst8 = instance(&[(20, 1)], 8, 1);
        let m8 = build_crown(&inst8).unwrap();
        let ban = m8.constraints.iter().find(|c| c.name == "maxwidth_t0").unwrap();
        assert_eq!(ban.expr.terms.len(), 7);
    }

    #[test]
    fn single_task_optimum_all_kinds() {
        let inst = single_task();
        for kind in SchedulerKind::ALL {
            let (r, s) = solve_instance(&inst, kind, 10.0).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal, "{kind}");
            assert!((r.objective - 2.0).abs() < 1e-9, "{kind}: {}", r.objective);
            let s = s.unwrap();
            assert_eq!(s.entries.len(), 1);
            assert_eq!(s.entries[0].cores.len(), 1);
            assert_eq!(s.entries[0].level, 0);
            assert!(s.entries[0].start.abs() < 1e-9);
            assert!((s.entries[0].end - 2.0).abs() < 1e-9);
            assert!((s.total_energy - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn crown_extraction_orders_root_before_leaf() {
        // Task A in G0 at level 0, task B in G1 at level 0.
        let tasks = TaskSet::from_pairs(&[(2, 2), (1, 1)]).unwrap();
        let machine = Machine::new(2, vec![1.0, 2.0], vec![1.0, 8.0]).unwrap();
        let inst = ProblemInstance::new(tasks, machine, 10.0).unwrap();
        let layout = VarLayout::new(SchedulerKind::Crown, 2, 2, 2);
        let mut values = vec![0.0; layout.num_vars()];
        values[layout.x(0, 0, 0).0] = 1.0;
        values[layout.x(1, 1, 0).0] = 1.0;
        let result = SolveResult {
            status: SolveStatus::Feasible,
            assignment: Some(values),
            objective: 0.0,
            best_bound: f64::NEG_INFINITY,
            gap: f64::INFINITY,
            nodes: 0,
            wall_time: 0.0,
        };
        let s = extract_schedule(&inst, SchedulerKind::Crown, &result).unwrap();
        assert_eq!(s.entries[0].cores, vec![0, 1]);
        assert!(s.entries[0].start.abs() < 1e-12);
        assert!((s.entries[0].end - 2.0 / 1.4).abs() < 1e-12);
        assert_eq!(s.entries[1].cores, vec![0]);
        assert!((s.entries[1].start - 2.0 / 1.4).abs() < 1e-12);
        assert!((s.entries[1].end - (2.0 / 1.4 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn crown_sibling_leaves_start_together() {
        let tasks = TaskSet::from_pairs(&[(3, 1), (5, 1)]).unwrap();
        let machine = Machine::new(2, vec![1.0, 2.0], vec![1.0, 8.0]).unwrap();
        let inst = ProblemInstance::new(tasks, machine, 6.0).unwrap();
        let (r, s) = solve_instance(&inst, SchedulerKind::Crown, 10.0).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        let s = s.unwrap();
        assert!(s.entries.iter().all(|e| e.start == 0.0));
        assert_ne!(s.entries[0].cores, s.entries[1].cores);
    }

    #[test]
    fn missing_allocation_is_inconsistent() {
        let inst = single_task();
        let layout = VarLayout::new(SchedulerKind::Crown, 1, 2, 2);
        let result = SolveResult {
            status: SolveStatus::Feasible,
            assignment: Some(vec![0.0; layout.num_vars()]),
            objective: 0.0,
            best_bound: 0.0,
            gap: 0.0,
            nodes: 0,
            wall_time: 0.0,
        };
        assert!(matches!(
            extract_schedule(&inst, SchedulerKind::Crown, &result),
            Err(Error::InconsistentAssignment(_))
        ));
    }

    #[test]
    fn schedule_json_shape() {
        let (_, s) = solve_instance(&single_task(), SchedulerKind::Group, 10.0).unwrap();
        let s = s.unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["kind"], "group");
        assert_eq!(v["deadline_s"], 2.0);
        assert!(v["entries"][0]["start_s"].is_number());
        assert!(v["entries"][0]["cores"].is_array());
        assert_eq!(Schedule::from_json(&s.to_json()).unwrap(), s);
    }
}
