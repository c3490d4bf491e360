//! Independent feasibility checking of schedules and an exhaustive optimum
//! oracle for tiny instances.

use std::fmt;

use crate::error::{Error, Result};
use crate::schedulers::{Schedule, SchedulerKind};
use crate::taskmodel::{build_groups, energy, ProblemInstance};

/// Absolute tolerance on times, relative tolerance on energy.
pub const TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    DeadlineExceeded,
    Overlap,
    BadWidth,
    NegativeStart,
    DuplicateTask,
    MissingTask,
    DurationMismatch,
    EnergyMismatch,
}

impl ViolationKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationKind::DeadlineExceeded => "DeadlineExceeded",
            ViolationKind::Overlap => "Overlap",
            ViolationKind::BadWidth => "BadWidth",
            ViolationKind::NegativeStart => "NegativeStart",
            ViolationKind::DuplicateTask => "DuplicateTask",
            ViolationKind::MissingTask => "MissingTask",
            ViolationKind::DurationMismatch => "DurationMismatch",
            ViolationKind::EnergyMismatch => "EnergyMismatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub tasks: Vec<usize>,
    pub cores: Vec<u32>,
    /// How far past tolerance the check failed (seconds or joules); always > 0.
    pub magnitude: f64,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.as_str(), self.detail)
    }
}

/// Lists every way `schedule` fails to be a feasible schedule of `inst`.
/// An empty list means the schedule is feasible and its stated energy is right.
pub fn validate(schedule: &Schedule, inst: &ProblemInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = inst.n();
    let p = inst.p();
    let m = inst.deadline;
    let mut seen = vec![0usize; n];
    let mut usable = vec![false; schedule.entries.len()];

    for (idx, e) in schedule.entries.iter().enumerate() {
        if e.task >= n {
            out.push(Violation {
                kind: ViolationKind::BadWidth,
                tasks: vec![e.task],
                cores: vec![],
                magnitude: 1.0,
                detail: format!("task {} does not exist (n = {n})", e.task),
            });
            continue;
        }
        seen[e.task] += 1;
        if seen[e.task] == 2 {
            out.push(Violation {
                kind: ViolationKind::DuplicateTask,
                tasks: vec![e.task],
                cores: vec![],
                magnitude: 1.0,
                detail: format!("task {} scheduled more than once", e.task),
            });
        }
        let mut sorted = e.cores.clone();
        sorted.sort_unstable();
        sorted.dedup();
        let bad_core = e.cores.iter().any(|&c| c >= p);
        if e.cores.is_empty() || sorted.len() != e.cores.len() || bad_core || e.level >= inst.k() {
            out.push(Violation {
                kind: ViolationKind::BadWidth,
                tasks: vec![e.task],
                cores: e.cores.clone(),
                magnitude: 1.0,
                detail: format!(
                    "task {} has invalid cores {:?} or level {} (p = {p}, K = {})",
                    e.task,
                    e.cores,
                    e.level,
                    inst.k()
                ),
            });
            continue;
        }
        usable[idx] = true;
        if e.start < -TOL {
            out.push(Violation {
                kind: ViolationKind::NegativeStart,
                tasks: vec![e.task],
                cores: vec![],
                magnitude: -e.start,
                detail: format!("task {} starts at {}", e.task, e.start),
            });
        }
        if e.end > m + TOL {
            out.push(Violation {
                kind: ViolationKind::DeadlineExceeded,
                tasks: vec![e.task],
                cores: vec![],
                magnitude: e.end - m,
                detail: format!("task {} ends at {} after deadline {m}", e.task, e.end),
            });
        }
        let expected = inst.tasks.tasks[e.task].runtime(e.width(), inst.machine.freq(e.level));
        let actual = e.end - e.start;
        if (actual - expected).abs() > TOL {
            out.push(Violation {
                kind: ViolationKind::DurationMismatch,
                tasks: vec![e.task],
                cores: vec![],
                magnitude: (actual - expected).abs(),
                detail: format!("task {} lasts {actual} but needs {expected}", e.task),
            });
        }
    }

    for (task, &count) in seen.iter().enumerate() {
        if count == 0 {
            out.push(Violation {
                kind: ViolationKind::MissingTask,
                tasks: vec![task],
                cores: vec![],
                magnitude: 1.0,
                detail: format!("task {task} is not scheduled"),
            });
        }
    }

    let entries: Vec<_> =
        schedule.entries.iter().zip(&usable).filter(|(_, &ok)| ok).map(|(e, _)| e).collect();
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            let shared: Vec<u32> = a.cores.iter().copied().filter(|c| b.cores.contains(c)).collect();
            if shared.is_empty() {
                continue;
            }
            let overlap = a.end.min(b.end) - a.start.max(b.start);
            if overlap > TOL {
                out.push(Violation {
                    kind: ViolationKind::Overlap,
                    tasks: vec![a.task, b.task],
                    cores: shared.clone(),
                    magnitude: overlap,
                    detail: format!(
                        "tasks {} and {} overlap by {overlap} on cores {shared:?}",
                        a.task, b.task
                    ),
                });
            }
        }
    }

    let recomputed: f64 =
        entries.iter().map(|e| energy(&inst.tasks.tasks[e.task], e.width(), e.level, &inst.machine)).sum();
    let diff = (recomputed - schedule.total_energy).abs();
    if diff > TOL * recomputed.abs().max(1.0) {
        out.push(Violation {
            kind: ViolationKind::EnergyMismatch,
            tasks: vec![],
            cores: vec![],
            magnitude: diff,
            detail: format!("stated {} J, recomputed {recomputed} J", schedule.total_energy),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleOutcome {
    Optimal(f64),
    Infeasible,
}

impl OracleOutcome {
    pub fn energy(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal(e) => Some(*e),
            OracleOutcome::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Placement {
    mask: u32,
    runtime: f64,
    energy: f64,
}

fn fits(end: f64, deadline: f64) -> bool {
    end <= deadline * (1.0 + 1e-9) + 1e-12
}

/// Exact optimum of a scheduler variant by exhaustive search.
///
/// Ordered variants accept an assignment when some task order, placed
/// greedily (each task starts once all of its cores are free), meets the
/// deadline. Any feasible schedule replayed in start-time order this way
/// never starts a task later, so this check is exact. The crown variant only
/// requires every core's accumulated runtime to fit, matching its fixed order.
pub fn oracle_optimal(inst: &ProblemInstance, kind: SchedulerKind) -> Result<OracleOutcome> {
    let n = inst.n();
    let p = inst.p();
    let levels = inst.k();
    if n > 5 || p > 4 || levels > 3 {
        return Err(Error::BudgetExceeded(format!("n = {n}, p = {p}, K = {levels}")));
    }
    let m = inst.deadline;

    let masks: Vec<u32> = match kind {
        SchedulerKind::Unrestricted => (1..(1u32 << p)).collect(),
        SchedulerKind::AllocPow2 => (1..(1u32 << p)).filter(|s| s.count_ones().is_power_of_two()).collect(),
        SchedulerKind::Group | SchedulerKind::Crown => {
            build_groups(p)?.iter().map(|g| g.cores().fold(0u32, |acc, c| acc | (1 << c))).collect()
        }
    };

    let mut options: Vec<Vec<Placement>> = Vec::with_capacity(n);
    for task in &inst.tasks.tasks {
        let mut opts = Vec::new();
        for &mask in &masks {
            let width = mask.count_ones();
            if kind == SchedulerKind::Crown && width > task.max_width {
                continue;
            }
            for k in 0..levels {
                let runtime = task.runtime(width, inst.machine.freq(k));
                if !fits(runtime, m) {
                    continue;
                }
                opts.push(Placement { mask, runtime, energy: energy(task, width, k, &inst.machine) });
            }
        }
        opts.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.mask.cmp(&b.mask)));
        if opts.is_empty() {
            return Ok(OracleOutcome::Infeasible);
        }
        options.push(opts);
    }
    // Lower bound on the energy of tasks j.. .
    let mut tail_min = vec![0.0; n + 1];
    for j in (0..n).rev() {
        tail_min[j] = tail_min[j + 1] + options[j][0].energy;
    }

    let mut search = Enumeration {
        options: &options,
        tail_min: &tail_min,
        deadline: m,
        ordered: kind != SchedulerKind::Crown,
        p: p as usize,
        chosen: Vec::with_capacity(n),
        load: vec![0.0; p as usize],
        best: f64::INFINITY,
    };
    search.descend(0, 0.0);
    Ok(if search.best.is_finite() { OracleOutcome::Optimal(search.best) } else { OracleOutcome::Infeasible })
}

struct Enumeration<'a> {
    options: &'a [Vec<Placement>],
    tail_min: &'a [f64],
    deadline: f64,
    ordered: bool,
    p: usize,
    chosen: Vec<Placement>,
    load: Vec<f64>,
    best: f64,
}

impl Enumeration<'_> {
    fn descend(&mut self, j: usize, energy_so_far: f64) {
        if j == self.options.len() {
            if !self.ordered || self.some_order_fits() {
                self.best = self.best.min(energy_so_far);
            }
            return;
        }
        for idx in 0..self.options[j].len() {
            let opt = self.options[j][idx];
            let total = energy_so_far + opt.energy;
            // Options are sorted by energy, so later ones cannot do better either.
            if total + self.tail_min[j + 1] >= self.best {
                break;
            }
            let cores: Vec<usize> = (0..self.p).filter(|&c| opt.mask & (1 << c) != 0).collect();
            if cores.iter().any(|&c| !fits(self.load[c] + opt.runtime, self.deadline)) {
                continue;
            }
            for &c in &cores {
                self.load[c] += opt.runtime;
            }
            self.chosen.push(opt);
            self.descend(j + 1, total);
            self.chosen.pop();
            for &c in &cores {
                self.load[c] -= opt.runtime;
            }
        }
    }

    fn some_order_fits(&self) -> bool {
        let mut used = vec![false; self.chosen.len()];
        let mut free_at = vec![0.0f64; self.p];
        self.place(&mut used, &mut free_at, 0)
    }

    fn place(&self, used: &mut [bool], free_at: &mut [f64], placed: usize) -> bool {
        if placed == self.chosen.len() {
            return true;
        }
        for t in 0..self.chosen.len() {
            if used[t] {
                continue;
            }
            let opt = self.chosen[t];
            let cores: Vec<usize> = (0..self.p).filter(|&c| opt.mask & (1 << c) != 0).collect();
            let start = cores.iter().map(|&c| free_at[c]).fold(0.0, f64::max);
            let end = start + opt.runtime;
            if !fits(end, self.deadline) {
                continue;
            }
            let saved: Vec<f64> = cores.iter().map(|&c| free_at[c]).collect();
            for &c in &cores {
                free_at[c] = end;
            }
            used[t] = true;
            let ok = self.place(used, free_at, placed + 1);
            used[t] = false;
            for (&c, &v) in cores.iter().zip(&saved) {
                free_at[c] = v;
            }
            if ok {
                return true;
            }
        }
        false
    }
}
