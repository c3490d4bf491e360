use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::BenchResult;
use crate::error::{Error, Result};
use crate::milp::SolveStatus;
use crate::schedulers::SchedulerKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RowKey {
    Cell { machine: u32, n: usize },
    MachineTotal(u32),
    GrandTotal,
}

impl RowKey {
    fn labels(&self) -> [String; 2] {
        match self {
            RowKey::Cell { machine, n } => [machine.to_string(), n.to_string()],
            RowKey::MachineTotal(machine) => [machine.to_string(), "total".into()],
            RowKey::GrandTotal => ["all".into(), "total".into()],
        }
    }
}

/// Plain rectangular table of strings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Columns padded to equal width; the first two left-aligned, the rest right-aligned.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, &w))| if i < 2 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        line(&self.header);
        for row in &self.rows {
            line(row);
        }
        out
    }
}

fn layout(results: &[BenchResult]) -> Vec<RowKey> {
    let mut cells: BTreeMap<u32, BTreeSet<usize>> = BTreeMap::new();
    for r in results {
        cells.entry(r.machine).or_default().insert(r.n);
    }
    let mut keys = Vec::new();
    for (machine, ns) in cells {
        keys.extend(ns.into_iter().map(|n| RowKey::Cell { machine, n }));
        keys.push(RowKey::MachineTotal(machine));
    }
    keys.push(RowKey::GrandTotal);
    keys
}

fn covers(key: RowKey, r: &BenchResult) -> bool {
    match key {
        RowKey::Cell { machine, n } => r.machine == machine && r.n == n,
        RowKey::MachineTotal(machine) => r.machine == machine,
        RowKey::GrandTotal => true,
    }
}

fn present(results: &[BenchResult]) -> Vec<SchedulerKind> {
    SchedulerKind::ALL.into_iter().filter(|k| results.iter().any(|r| r.scheduler == *k)).collect()
}

/// Counts per (machine, n) row and scheduler column.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pub title: &'static str,
    pub schedulers: Vec<SchedulerKind>,
    pub rows: Vec<(RowKey, Vec<usize>)>,
}

impl CountTable {
    pub fn get(&self, key: RowKey, kind: SchedulerKind) -> Option<usize> {
        let col = self.schedulers.iter().position(|k| *k == kind)?;
        self.rows.iter().find(|(k, _)| *k == key).map(|(_, c)| c[col])
    }

    pub fn render(&self) -> Table {
        let mut header = vec!["machine".to_string(), "n".to_string()];
        header.extend(self.schedulers.iter().map(|k| k.to_string()));
        let rows = self
            .rows
            .iter()
            .map(|(key, counts)| {
                let mut row = key.labels().to_vec();
                row.extend(counts.iter().map(|c| c.to_string()));
                row
            })
            .collect();
        Table { header, rows }
    }
}

fn count_where(
    results: &[BenchResult],
    title: &'static str,
    pred: impl Fn(&BenchResult) -> bool,
) -> CountTable {
    let schedulers = present(results);
    let rows = layout(results)
        .into_iter()
        .map(|key| {
            let counts = schedulers
                .iter()
                .map(|&kind| {
                    results.iter().filter(|r| r.scheduler == kind && covers(key, r) && pred(r)).count()
                })
                .collect();
            (key, counts)
        })
        .collect();
    CountTable { title, schedulers, rows }
}

/// Solves that ran out of time without proving optimality.
pub fn tabulate_timeouts(results: &[BenchResult]) -> CountTable {
    count_where(results, "timeouts", |r| r.status == SolveStatus::TimeLimit)
}

pub fn tabulate_optimal(results: &[BenchResult]) -> CountTable {
    count_where(results, "optimal solutions", |r| r.status == SolveStatus::Optimal)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioStats {
    pub best: f64,
    pub avg: f64,
    pub worst: f64,
    pub count: usize,
}

impl RatioStats {
    fn of(ratios: &[f64]) -> Option<Self> {
        if ratios.is_empty() {
            return None;
        }
        Some(Self {
            best: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            avg: ratios.iter().sum::<f64>() / ratios.len() as f64,
            worst: ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            count: ratios.len(),
        })
    }
}

/// Energy of each constrained scheduler relative to the unrestricted one.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    pub schedulers: Vec<SchedulerKind>,
    pub rows: Vec<(RowKey, Vec<Option<RatioStats>>)>,
}

impl EnergyTable {
    pub fn get(&self, key: RowKey, kind: SchedulerKind) -> Option<RatioStats> {
        let col = self.schedulers.iter().position(|k| *k == kind)?;
        self.rows.iter().find(|(k, _)| *k == key).and_then(|(_, c)| c[col])
    }

    pub fn render(&self, decimals: usize) -> Table {
        let mut header = vec!["machine".to_string(), "n".to_string()];
        for k in &self.schedulers {
            for stat in ["best", "avg", "worst"] {
                header.push(format!("{k}_{stat}"));
            }
        }
        let rows = self
            .rows
            .iter()
            .map(|(key, stats)| {
                let mut row = key.labels().to_vec();
                for s in stats {
                    match s {
                        Some(s) => row.extend([s.best, s.avg, s.worst].map(|v| format!("{v:.decimals$}"))),
                        None => row.extend(["-", "-", "-"].map(String::from)),
                    }
                }
                row
            })
            .collect();
        Table { header, rows }
    }
}

/// Per-set ratios `energy / unrestricted energy`, summarised per cell and per machine.
///
/// Sets the unrestricted scheduler proved infeasible are skipped, as is any
/// constrained result without a schedule. A set whose unrestricted solve
/// produced no schedule for any other reason is an error.
pub fn tabulate_energy_relative(results: &[BenchResult]) -> Result<EnergyTable> {
    let schedulers: Vec<SchedulerKind> =
        present(results).into_iter().filter(|k| *k != SchedulerKind::Unrestricted).collect();
    let mut baseline: BTreeMap<(u32, usize, usize), f64> = BTreeMap::new();
    for r in results.iter().filter(|r| r.scheduler == SchedulerKind::Unrestricted) {
        match (r.energy_j, r.status) {
            (Some(e), _) => {
                baseline.insert((r.machine, r.n, r.set_index), e);
            }
            (None, SolveStatus::Infeasible) => {}
            (None, _) => {
                return Err(Error::MissingBaseline { machine: r.machine, n: r.n, set_index: r.set_index })
            }
        }
    }
    let mut ratios: Vec<(&BenchResult, f64)> = Vec::new();
    for r in results.iter().filter(|r| r.scheduler != SchedulerKind::Unrestricted) {
        let Some(e) = r.energy_j else { continue };
        let key = (r.machine, r.n, r.set_index);
        match baseline.get(&key) {
            Some(base) => ratios.push((r, e / base)),
            None if results.iter().any(|b| {
                b.scheduler == SchedulerKind::Unrestricted && (b.machine, b.n, b.set_index) == key
            }) => {}
            None => {
                return Err(Error::MissingBaseline { machine: r.machine, n: r.n, set_index: r.set_index })
            }
        }
    }
    let rows = layout(results)
        .into_iter()
        .filter(|key| *key != RowKey::GrandTotal)
        .map(|key| {
            let stats = schedulers
                .iter()
                .map(|&kind| {
                    let vals: Vec<f64> = ratios
                        .iter()
                        .filter(|(r, _)| r.scheduler == kind && covers(key, r))
                        .map(|(_, v)| *v)
                        .collect();
                    RatioStats::of(&vals)
                })
                .collect();
            (key, stats)
        })
        .collect();
    Ok(EnergyTable { schedulers, rows })
}
