//! Benchmark harness: run every scheduler over generated task sets, collect
//! per-solve records, and summarise them as tables and Gantt drawings.

mod gantt;
mod tables;

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{SolveOptions, SolveStatus};
use crate::schedulers::{solve_instance_with, SchedulerKind};
use crate::taskmodel::{generate_taskset, Machine, ProblemInstance};
use crate::validate::validate;

pub use gantt::export_gantt;
pub use tables::{
    tabulate_energy_relative, tabulate_optimal, tabulate_timeouts, CountTable, EnergyTable, RatioStats,
    RowKey, Table,
};

/// Allowed overrun of the solver time limit when checking recorded wall times.
pub const TIME_GRACE_S: f64 = 1.0;

fn default_freqs() -> Vec<f64> {
    vec![0.6, 1.1, 1.6]
}

fn all_schedulers() -> Vec<SchedulerKind> {
    SchedulerKind::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub task_set_sizes: Vec<usize>,
    pub sets_per_size: usize,
    pub machine_sizes: Vec<u32>,
    /// Deadline factor per machine size.
    pub d_values: BTreeMap<u32, f64>,
    /// Per-solve wall-clock limit in seconds.
    pub time_limit: f64,
    pub seed: u64,
    /// Frequency ladder in GHz; power follows the cubic model.
    #[serde(default = "default_freqs")]
    pub freq_levels_ghz: Vec<f64>,
    #[serde(default = "all_schedulers")]
    pub schedulers: Vec<SchedulerKind>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl SuiteConfig {
    /// Small suite that finishes on a laptop.
    pub fn desk() -> Self {
        Self {
            task_set_sizes: vec![2, 3, 4],
            sets_per_size: 10,
            machine_sizes: vec![2, 4],
            d_values: BTreeMap::from([(2, 0.8), (4, 0.8)]),
            time_limit: 60.0,
            seed: 2014,
            freq_levels_ghz: default_freqs(),
            schedulers: all_schedulers(),
        }
    }

    /// Full-size suite: 40 task sets on 4 and 8 cores, 5 minute limit.
    pub fn full_scale() -> Self {
        Self {
            task_set_sizes: vec![4, 8, 16, 32],
            sets_per_size: 10,
            machine_sizes: vec![4, 8],
            d_values: BTreeMap::from([(4, 0.8), (8, 1.0)]),
            time_limit: 300.0,
            seed: 2014,
            freq_levels_ghz: crate::taskmodel::DEFAULT_FREQS_GHZ.to_vec(),
            schedulers: all_schedulers(),
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.task_set_sizes.is_empty() || self.task_set_sizes.contains(&0) {
            return bad("task_set_sizes must be non-empty and positive".into());
        }
        if self.machine_sizes.is_empty() || self.machine_sizes.contains(&0) {
            return bad("machine_sizes must be non-empty and positive".into());
        }
        if self.sets_per_size == 0 {
            return bad("sets_per_size must be positive".into());
        }
        if self.time_limit.is_nan() || self.time_limit <= 0.0 {
            return bad(format!("time_limit must be positive, got {}", self.time_limit));
        }
        if self.schedulers.is_empty() {
            return bad("schedulers must not be empty".into());
        }
        for &p in &self.machine_sizes {
            match self.d_values.get(&p) {
                Some(d) if *d > 0.0 => {}
                Some(d) => return bad(format!("d for p = {p} must be positive, got {d}")),
                None => return bad(format!("no d value for machine size {p}")),
            }
            if !p.is_power_of_two() && self.schedulers.iter().any(|k| k.uses_groups()) {
                return Err(Error::NotPowerOfTwo(p));
            }
        }
        for &p in &self.machine_sizes {
            Machine::with_cubic_power(p, self.freq_levels_ghz.clone())?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Number of solves a run performs.
    pub fn cell_count(&self) -> usize {
        self.machine_sizes.len() * self.task_set_sizes.len() * self.sets_per_size * self.schedulers.len()
    }

    /// The instance solved for one suite cell.
    pub fn instance(&self, p: u32, n: usize, set_index: usize) -> Result<ProblemInstance> {
        let machine = Machine::with_cubic_power(p, self.freq_levels_ghz.clone())?;
        let d = *self
            .d_values
            .get(&p)
            .ok_or_else(|| Error::InvalidInput(format!("no d value for machine size {p}")))?;
        let tasks = generate_taskset(n, set_seed(self.seed, n, set_index));
        ProblemInstance::with_factor(tasks, machine, d)
    }
}

/// Seed of task set `index` of size `n`; independent of the machine so both
/// machine sizes see the same task sets.
pub fn set_seed(seed: u64, n: usize, index: usize) -> u64 {
    // splitmix64 finaliser over a simple combination
    let mut z = seed
        ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub scheduler: SchedulerKind,
    pub machine: u32,
    pub n: usize,
    pub set_index: usize,
    pub status: SolveStatus,
    pub wall_time_s: f64,
    pub nodes: u64,
    /// Recomputed energy of the extracted schedule, if one exists.
    pub energy_j: Option<f64>,
    pub gap: Option<f64>,
}

impl BenchResult {
    /// Everything except the wall time, which varies between runs.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self { wall_time_s: 0.0, ..self.clone() } == Self { wall_time_s: 0.0, ..other.clone() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    scheduler: String,
    machine_cores: u32,
    n_tasks: usize,
    set_index: usize,
    status: String,
    wall_time_s: f64,
    nodes: u64,
    energy_j: Option<f64>,
    gap: Option<f64>,
}

/// Runs every cell of `cfg` on `workers` threads; `workers == 1` is serial.
/// Results come back in a fixed order: machine, task set size, set index,
/// scheduler.
pub fn run_suite(cfg: &SuiteConfig, workers: usize) -> Result<Vec<BenchResult>> {
    cfg.check()?;
    let mut cells = Vec::with_capacity(cfg.cell_count());
    for &p in &cfg.machine_sizes {
        for &n in &cfg.task_set_sizes {
            for set_index in 0..cfg.sets_per_size {
                for &kind in &cfg.schedulers {
                    cells.push((p, n, set_index, kind));
                }
            }
        }
    }
    let run =
        |&(p, n, set_index, kind): &(u32, usize, usize, SchedulerKind)| run_cell(cfg, p, n, set_index, kind);
    if workers <= 1 {
        return cells.iter().map(run).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    pool.install(|| cells.par_iter().map(run).collect())
}

fn run_cell(
    cfg: &SuiteConfig,
    p: u32,
    n: usize,
    set_index: usize,
    kind: SchedulerKind,
) -> Result<BenchResult> {
    let inst = cfg.instance(p, n, set_index)?;
    let started = Instant::now();
    let (result, schedule) =
        solve_instance_with(&inst, kind, &SolveOptions::with_time_limit(cfg.time_limit))?;
    let wall_time_s = started.elapsed().as_secs_f64();
    let cell = format!("{kind}, p = {p}, n = {n}, set {set_index}");
    let energy_j = match &schedule {
        Some(s) => {
            let violations = validate(s, &inst);
            if !violations.is_empty() {
                let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                return Err(Error::InfeasibleSchedule(format!("{cell}: {}", list.join("; "))));
            }
            let recomputed = s.recomputed_energy(&inst);
            if (recomputed - result.objective).abs() > 1e-6 * recomputed.abs().max(1.0) {
                return Err(Error::InfeasibleSchedule(format!(
                    "{cell}: objective {} differs from recomputed energy {recomputed}",
                    result.objective
                )));
            }
            Some(recomputed)
        }
        None => None,
    };
    Ok(BenchResult {
        scheduler: kind,
        machine: p,
        n,
        set_index,
        status: result.status,
        wall_time_s,
        nodes: result.nodes,
        energy_j,
        gap: result.gap.is_finite().then_some(result.gap),
    })
}

pub const CSV_HEADER: &str =
    "scheduler,machine_cores,n_tasks,set_index,status,wall_time_s,nodes,energy_j,gap";

pub fn write_results_csv<W: Write>(results: &[BenchResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(CsvRow {
            scheduler: r.scheduler.to_string(),
            machine_cores: r.machine,
            n_tasks: r.n,
            set_index: r.set_index,
            status: r.status.to_string(),
            wall_time_s: r.wall_time_s,
            nodes: r.nodes,
            energy_j: r.energy_j,
            gap: r.gap,
        })?;
    }
    if results.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<BenchResult>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        out.push(BenchResult {
            scheduler: row.scheduler.parse()?,
            machine: row.machine_cores,
            n: row.n_tasks,
            set_index: row.set_index,
            status: row.status.parse()?,
            wall_time_s: row.wall_time_s,
            nodes: row.nodes,
            energy_j: row.energy_j,
            gap: row.gap,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SuiteConfig {
        SuiteConfig {
            task_set_sizes: vec![2],
            sets_per_size: 2,
            machine_sizes: vec![2, 4],
            d_values: BTreeMap::from([(2, 0.8), (4, 0.8)]),
            time_limit: 30.0,
            seed: 5,
            freq_levels_ghz: default_freqs(),
            schedulers: all_schedulers(),
        }
    }

    #[test]
    fn cell_counts() {
        let mut cfg = tiny();
        cfg.task_set_sizes = vec![4];
        cfg.sets_per_size = 10;
        cfg.machine_sizes = vec![4, 8];
        cfg.d_values = BTreeMap::from([(4, 0.8), (8, 1.0)]);
        assert_eq!(cfg.cell_count(), 80);
        assert_eq!(SuiteConfig::full_scale().cell_count(), 320);
    }

    #[test]
    fn config_checks() {
        let mut cfg = tiny();
        cfg.d_values.remove(&4);
        assert!(matches!(cfg.check(), Err(Error::InvalidInput(_))));
        let mut cfg = tiny();
        cfg.machine_sizes = vec![3];
        cfg.d_values.insert(3, 1.0);
        assert!(matches!(cfg.check(), Err(Error::NotPowerOfTwo(3))));
        cfg.schedulers = vec![SchedulerKind::Unrestricted];
        assert!(cfg.check().is_ok());
        let mut cfg = tiny();
        cfg.task_set_sizes = vec![0];
        assert!(cfg.check().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = SuiteConfig::desk();
        assert_eq!(SuiteConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let minimal = r#"{"task_set_sizes":[2],"sets_per_size":1,"machine_sizes":[4],
            "d_values":{"4":0.8},"time_limit":10,"seed":1}"#;
        let cfg = SuiteConfig::from_json(minimal).unwrap();
        assert_eq!(cfg.freq_levels_ghz, vec![0.6, 1.1, 1.6]);
        assert_eq!(cfg.schedulers.len(), 4);
    }

    #[test]
    fn same_sets_on_every_machine() {
        let cfg = tiny();
        let a = cfg.instance(2, 2, 1).unwrap();
        let b = cfg.instance(4, 2, 1).unwrap();
        assert_eq!(a.tasks, b.tasks);
        assert_ne!(cfg.instance(2, 2, 0).unwrap().tasks, a.tasks);
    }

    #[test]
    fn suite_is_deterministic_and_valid() {
        let cfg = tiny();
        let serial = run_suite(&cfg, 1).unwrap();
        let parallel = run_suite(&cfg, 4).unwrap();
        assert_eq!(serial.len(), cfg.cell_count());
        for (a, b) in serial.iter().zip(&parallel) {
            assert!(a.same_outcome(b), "{a:?} vs {b:?}");
        }
        for r in &serial {
            if r.status == SolveStatus::Optimal {
                assert!(r.gap.unwrap() <= 1e-6);
            }
            assert!(r.wall_time_s <= cfg.time_limit + TIME_GRACE_S);
        }
    }

    #[test]
    fn csv_round_trip() {
        let results = vec![BenchResult {
            scheduler: SchedulerKind::AllocPow2,
            machine: 4,
            n: 3,
            set_index: 7,
            status: SolveStatus::TimeLimit,
            wall_time_s: 60.5,
            nodes: 1234,
            energy_j: None,
            gap: None,
        }];
        let mut buf = Vec::new();
        write_results_csv(&results, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(text.lines().nth(1).unwrap(), "allocpow2,4,3,7,TimeLimit,60.5,1234,,");
        assert_eq!(read_results_csv(buf.as_slice()).unwrap(), results);

        let mut buf = Vec::new();
        write_results_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CSV_HEADER);
    }
}
