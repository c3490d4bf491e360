//! Task and machine model.
//!
//! Workloads are expressed in gigacycles and frequencies in GHz, so every
//! runtime produced here is in seconds and every energy in joules.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parallel efficiency assigned to widths beyond a task's maximum width.
pub const OVERSIZE_EFFICIENCY: f64 = 0.000001;

/// Default frequency ladder in GHz (six equally spaced levels).
pub const DEFAULT_FREQS_GHZ: [f64; 6] = [0.6, 0.8, 1.0, 1.2, 1.4, 1.6];

/// Candidate maximum widths for generated tasks.
const GENERATED_WIDTHS: [u32; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    /// Gigacycles.
    pub workload: u64,
    /// Maximum useful number of cores.
    pub max_width: u32,
}

impl Task {
    pub fn new(id: usize, workload: u64, max_width: u32) -> Result<Self> {
        if workload == 0 {
            return Err(Error::InvalidInput(format!("task {id}: workload must be >= 1")));
        }
        if max_width == 0 {
            return Err(Error::InvalidInput(format!("task {id}: max_width must be >= 1")));
        }
        Ok(Self { id, workload, max_width })
    }

    /// Parallel efficiency on `q` cores.
    pub fn efficiency(&self, q: u32) -> f64 {
        efficiency(self.max_width, q)
    }

    /// Per-core runtime in seconds on `width` cores at `freq_ghz`.
    pub fn runtime(&self, width: u32, freq_ghz: f64) -> f64 {
        self.workload as f64 / (freq_ghz * width as f64 * self.efficiency(width))
    }
}

/// Parallel efficiency of a task with maximum width `max_width` on `q >= 1` cores.
pub fn efficiency(max_width: u32, q: u32) -> f64 {
    debug_assert!(q >= 1);
    if q <= 1 {
        1.0
    } else if q <= max_width {
        let ratio = q as f64 / max_width as f64;
        1.0 - 0.3 * ratio * ratio
    } else {
        OVERSIZE_EFFICIENCY
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSet {
    pub tasks: Vec<Task>,
}

impl TaskSet {
    /// Builds a task set, requiring ids to be exactly `0..n` in order.
    pub fn new(tasks: Vec<Task>) -> Result<Self> {
        for (pos, task) in tasks.iter().enumerate() {
            if task.id != pos {
                return Err(Error::InvalidInput(format!(
                    "task ids must be 0..n in order; found id {} at position {pos}",
                    task.id
                )));
            }
            Task::new(task.id, task.workload, task.max_width)?;
        }
        Ok(Self { tasks })
    }

    /// Convenience constructor from `(workload, max_width)` pairs.
    pub fn from_pairs(pairs: &[(u64, u32)]) -> Result<Self> {
        let tasks = pairs
            .iter()
            .enumerate()
            .map(|(id, &(w, mw))| Task::new(id, w, mw))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tasks })
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn total_workload(&self) -> u64 {
        self.tasks.iter().map(|t| t.workload).sum()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Task> {
        self.tasks.iter()
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let set: TaskSet = serde_json::from_str(text)?;
        Self::new(set.tasks)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("task set serializes")
    }
}

/// Homogeneous multicore with discrete, per-core frequency levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    core_count: u32,
    freq_levels: Vec<f64>,
    power: Vec<f64>,
}

impl Machine {
    pub fn new(core_count: u32, freq_levels: Vec<f64>, power: Vec<f64>) -> Result<Self> {
        if core_count == 0 {
            return Err(Error::InvalidInput("machine needs at least one core".into()));
        }
        if freq_levels.is_empty() {
            return Err(Error::InvalidInput("machine needs at least one frequency level".into()));
        }
        if freq_levels.len() != power.len() {
            return Err(Error::InvalidInput(format!(
                "{} frequency levels but {} power values",
                freq_levels.len(),
                power.len()
            )));
        }
        if freq_levels.iter().chain(&power).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidInput(
                "frequencies and power values must be positive and finite".into(),
            ));
        }
        if freq_levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("frequency levels must be strictly increasing".into()));
        }
        if power.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("power must be strictly increasing with frequency".into()));
        }
        Ok(Self { core_count, freq_levels, power })
    }

    /// Machine whose power per level follows the cubic model `f^3` watts.
    pub fn with_cubic_power(core_count: u32, freq_levels: Vec<f64>) -> Result<Self> {
        let power = freq_levels.iter().map(|f| cubic_power(*f)).collect();
        Self::new(core_count, freq_levels, power)
    }

    /// `core_count` cores, the default six-level ladder and cubic power.
    pub fn default_with_cores(core_count: u32) -> Result<Self> {
        Self::with_cubic_power(core_count, DEFAULT_FREQS_GHZ.to_vec())
    }

    /// `levels` equally spaced frequencies between `lo` and `hi` GHz, cubic power.
    pub fn evenly_spaced(core_count: u32, lo: f64, hi: f64, levels: usize) -> Result<Self> {
        let freqs = match levels {
            0 => Vec::new(),
            1 => vec![hi],
            k => (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect(),
        };
        Self::with_cubic_power(core_count, freqs)
    }

    pub fn core_count(&self) -> u32 {
        self.core_count
    }

    pub fn levels(&self) -> usize {
        self.freq_levels.len()
    }

    pub fn freq(&self, level: usize) -> f64 {
        self.freq_levels[level]
    }

    pub fn power(&self, level: usize) -> f64 {
        self.power[level]
    }

    pub fn freq_levels(&self) -> &[f64] {
        &self.freq_levels
    }

    pub fn power_levels(&self) -> &[f64] {
        &self.power
    }

    pub fn f_min(&self) -> f64 {
        self.freq_levels[0]
    }

    pub fn f_max(&self) -> f64 {
        *self.freq_levels.last().expect("non-empty ladder")
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MachineFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MachineFile::from(self)).expect("machine serializes")
    }
}

/// On-disk machine description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MachineFile {
    pub cores: u32,
    pub freq_ghz: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_w: Option<Vec<f64>>,
}

impl TryFrom<MachineFile> for Machine {
    type Error = Error;

    fn try_from(file: MachineFile) -> Result<Self> {
        match file.power_w {
            Some(power) => Machine::new(file.cores, file.freq_ghz, power),
            None => Machine::with_cubic_power(file.cores, file.freq_ghz),
        }
    }
}

impl From<&Machine> for MachineFile {
    fn from(m: &Machine) -> Self {
        Self { cores: m.core_count, freq_ghz: m.freq_levels.clone(), power_w: Some(m.power.clone()) }
    }
}

/// Dynamic power model: `f^3` watts for `f` in GHz.
pub fn cubic_power(freq_ghz: f64) -> f64 {
    freq_ghz * freq_ghz * freq_ghz
}

/// Per-core runtime (seconds) of `task` on `width` cores at `freq_ghz`.
pub fn runtime(task: &Task, width: u32, freq_ghz: f64) -> f64 {
    task.runtime(width, freq_ghz)
}

/// Energy (joules) of running `task` on `width` cores at frequency `level`.
pub fn energy(task: &Task, width: u32, level: usize, machine: &Machine) -> f64 {
    task.runtime(width, machine.freq(level)) * machine.power(level) * width as f64
}

/// Common deadline derived from the task set's total workload.
///
/// Averages the all-cores-at-`f_max` lower bound with twice the
/// all-cores-at-`f_min` bound and scales the result by `d`.
pub fn deadline(tasks: &TaskSet, machine: &Machine, d: f64) -> f64 {
    deadline_for_workload(tasks.total_workload() as f64, machine, d)
}

pub fn deadline_for_workload(total_workload: f64, machine: &Machine, d: f64) -> f64 {
    let p = machine.core_count() as f64;
    let fast = total_workload / (p * machine.f_max());
    let slow = 2.0 * total_workload / (p * machine.f_min());
    d * (fast + slow) / 2.0
}

/// Widths `w` from {1,2,4,8} admissible for a task of the given workload.
///
/// A width is admissible when `workload / w > 25`; width 1 is always kept.
pub fn admissible_widths(workload: u64) -> Vec<u32> {
    let wide: Vec<u32> = GENERATED_WIDTHS.iter().copied().filter(|&w| workload > 25 * w as u64).collect();
    if wide.is_empty() {
        vec![1]
    } else {
        wide
    }
}

/// Synthetic task set: workloads uniform in [1,100], maximum widths
/// uniform over the admissible subset of {1,2,4,8}.
pub fn generate_taskset(n: usize, seed: u64) -> TaskSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tasks = (0..n)
        .map(|id| {
            let workload = rng.gen_range(1..=100u64);
            let widths = admissible_widths(workload);
            let max_width = widths[rng.gen_range(0..widths.len())];
            Task { id, workload, max_width }
        })
        .collect();
    TaskSet { tasks }
}

/// A problem instance: tasks, machine and common deadline (seconds).
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub tasks: TaskSet,
    pub machine: Machine,
    pub deadline: f64,
}

impl ProblemInstance {
    pub fn new(tasks: TaskSet, machine: Machine, deadline: f64) -> Result<Self> {
        if !(deadline.is_finite() && deadline > 0.0) {
            return Err(Error::InvalidInput(format!("deadline must be positive, got {deadline}")));
        }
        Ok(Self { tasks, machine, deadline })
    }

    /// Instance whose deadline comes from the workload formula with factor `d`.
    pub fn with_factor(tasks: TaskSet, machine: Machine, d: f64) -> Result<Self> {
        let m = deadline(&tasks, &machine, d);
        Self::new(tasks, machine, m)
    }

    pub fn n(&self) -> usize {
        self.tasks.len()
    }

    pub fn p(&self) -> u32 {
        self.machine.core_count()
    }

    pub fn k(&self) -> usize {
        self.machine.levels()
    }
}

/// A node of the binary core-group tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoreGroup {
    pub index: usize,
    pub first_core: u32,
    pub size: u32,
}

impl CoreGroup {
    pub fn contains(&self, core: u32) -> bool {
        core >= self.first_core && core < self.first_core + self.size
    }

    pub fn cores(&self) -> std::ops::Range<u32> {
        self.first_core..self.first_core + self.size
    }
}

fn require_pow2(p: u32) -> Result<()> {
    if p == 0 || !p.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(p));
    }
    Ok(())
}

/// Builds the `2p - 1` core groups in breadth-first order: group 0 holds all
/// cores, the children of group `i` are `2i + 1` (lower half) and `2i + 2`
/// (upper half), and leaves hold one core each.
pub fn build_groups(p: u32) -> Result<Vec<CoreGroup>> {
    require_pow2(p)?;
    let count = 2 * p as usize - 1;
    let mut groups = Vec::with_capacity(count);
    groups.push(CoreGroup { index: 0, first_core: 0, size: p });
    for index in 1..count {
        let parent = groups[(index - 1) / 2];
        let size = parent.size / 2;
        let first_core = if index % 2 == 1 { parent.first_core } else { parent.first_core + size };
        groups.push(CoreGroup { index, first_core, size });
    }
    Ok(groups)
}

/// Indices of the groups contained in group `i`, including `i` itself, ascending.
pub fn offspring(i: usize, p: u32) -> Result<Vec<usize>> {
    require_pow2(p)?;
    let count = 2 * p as usize - 1;
    if i >= count {
        return Err(Error::InvalidInput(format!("group index {i} out of range for p = {p}")));
    }
    let mut out = Vec::new();
    let mut level = vec![i];
    while !level.is_empty() {
        out.extend_from_slice(&level);
        level = level.iter().flat_map(|&g| [2 * g + 1, 2 * g + 2]).filter(|&g| g < count).collect();
    }
    out.sort_unstable();
    Ok(out)
}

/// The `log2(p) + 1` groups on the root-to-leaf path of core `l`, ascending.
pub fn groups_of_core(l: u32, p: u32) -> Result<Vec<usize>> {
    require_pow2(p)?;
    if l >= p {
        return Err(Error::InvalidInput(format!("core {l} out of range for p = {p}")));
    }
    // Leaves occupy indices p-1 ..= 2p-2 in core order.
    let mut g = (p - 1 + l) as usize;
    let mut path = vec![g];
    while g > 0 {
        g = (g - 1) / 2;
        path.push(g);
    }
    path.reverse();
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn efficiency_branches() {
        assert_eq!(efficiency(4, 1), 1.0);
        assert!(close(efficiency(4, 2), 0.925));
        assert_eq!(efficiency(4, 8), 0.000001);
        assert!(close(efficiency(4, 4), 0.7));
    }

    #[test]
    fn runtime_examples() {
        let unit = Task::new(0, 1, 1).unwrap();
        assert_eq!(unit.runtime(1, 1.0), 1.0);
        let t = Task::new(0, 80, 4).unwrap();
        assert!(close(t.runtime(2, 1.0), 80.0 / 1.85));
        assert!(close(t.runtime(2, 1.0), 43.243243243243));
        assert!(close(t.runtime(1, 1.6), 50.0));
    }

    #[test]
    fn energy_examples() {
        let m = Machine::new(2, vec![1.0, 2.0], vec![1.0, 8.0]).unwrap();
        let unit = Task::new(0, 1, 1).unwrap();
        assert_eq!(energy(&unit, 1, 0, &m), 1.0);
        let t = Task::new(0, 2, 2).unwrap();
        assert!(close(energy(&t, 2, 0, &m), 2.0 / 1.4 * 2.0));
        assert!(close(energy(&t, 2, 0, &m), 2.857142857142857));
        assert!(close(energy(&t, 1, 1, &m), 8.0));
    }

    #[test]
    fn deadline_examples() {
        let m4 = Machine::new(4, vec![0.6, 1.6], vec![1.0, 2.0]).unwrap();
        assert!(close(deadline_for_workload(100.0, &m4, 0.8), 39.583333333333));
        let m8 = Machine::new(8, vec![0.6, 1.6], vec![1.0, 2.0]).unwrap();
        assert!(close(deadline_for_workload(100.0, &m8, 1.0), 24.739583333333));
        assert_eq!(deadline(&TaskSet::default(), &m8, 1.0), 0.0);
    }

    #[test]
    fn admissible_width_rule() {
        assert_eq!(admissible_widths(30), vec![1]);
        assert_eq!(admissible_widths(100), vec![1, 2]);
        assert_eq!(admissible_widths(5), vec![1]);
        assert_eq!(admissible_widths(51), vec![1, 2]);
        assert_eq!(admissible_widths(50), vec![1]);
    }

    #[test]
    fn generator_is_deterministic_and_respects_rule() {
        let a = generate_taskset(4, 17);
        assert_eq!(a, generate_taskset(4, 17));
        assert_eq!(a.len(), 4);
        let big = generate_taskset(2000, 3);
        for t in big.iter() {
            assert!((1..=100).contains(&t.workload));
            assert!(t.max_width == 1 || t.workload > 25 * t.max_width as u64);
            if t.workload == 30 {
                assert_eq!(t.max_width, 1);
            }
            if t.workload == 100 {
                assert!(t.max_width == 1 || t.max_width == 2);
            }
        }
    }

    #[test]
    fn group_tree_shapes() {
        let g8 = build_groups(8).unwrap();
        assert_eq!(g8.len(), 15);
        assert_eq!((g8[1].first_core, g8[1].size), (0, 4));
        assert_eq!((g8[2].first_core, g8[2].size), (4, 4));
        assert!((7..15).all(|i| g8[i].size == 1 && g8[i].first_core == (i - 7) as u32));

        let g1 = build_groups(1).unwrap();
        assert_eq!(g1, vec![CoreGroup { index: 0, first_core: 0, size: 1 }]);

        let sizes: Vec<u32> = build_groups(4).unwrap().iter().map(|g| g.size).collect();
        assert_eq!(sizes, vec![4, 2, 2, 1, 1, 1, 1]);

        assert!(matches!(build_groups(3), Err(Error::NotPowerOfTwo(3))));
        assert!(build_groups(0).is_err());
    }

    #[test]
    fn offspring_examples() {
        assert_eq!(offspring(1, 8).unwrap(), vec![1, 3, 4, 7, 8, 9, 10]);
        assert_eq!(offspring(14, 8).unwrap(), vec![14]);
        assert_eq!(offspring(0, 8).unwrap(), (0..15).collect::<Vec<_>>());
    }

    #[test]
    fn groups_of_core_examples() {
        assert_eq!(groups_of_core(5, 8).unwrap(), vec![0, 2, 5, 12]);
        assert_eq!(groups_of_core(0, 1).unwrap(), vec![0]);
        assert_eq!(groups_of_core(0, 4).unwrap(), vec![0, 1, 3]);
    }

    #[test]
    fn group_tree_invariants() {
        for exp in 0..6 {
            let p = 1u32 << exp;
            let groups = build_groups(p).unwrap();
            let depth = exp as u32 + 1;
            assert_eq!(groups.iter().map(|g| g.size).sum::<u32>(), p * depth);
            for g in &groups {
                assert_eq!(g.first_core % g.size, 0);
            }
            for l in 0..p {
                let containing: Vec<usize> =
                    groups.iter().filter(|g| g.contains(l)).map(|g| g.index).collect();
                assert_eq!(containing.len() as u32, depth);
                assert_eq!(containing, groups_of_core(l, p).unwrap());
            }
            for i in 0..groups.len() {
                let left = 2 * i + 1;
                if left + 1 < groups.len() {
                    let a = offspring(left, p).unwrap();
                    let b = offspring(left + 1, p).unwrap();
                    assert!(a.iter().all(|x| !b.contains(x)));
                }
            }
        }
    }

    #[test]
    fn machine_validation() {
        assert!(Machine::new(4, vec![1.0, 1.0], vec![1.0, 2.0]).is_err());
        assert!(Machine::new(4, vec![1.0, 2.0], vec![2.0, 1.0]).is_err());
        assert!(Machine::new(4, vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(Machine::new(0, vec![1.0], vec![1.0]).is_err());
        let m = Machine::default_with_cores(4).unwrap();
        assert_eq!(m.levels(), 6);
        assert!(close(m.power(5), 1.6f64.powi(3)));
    }

    #[test]
    fn machine_file_defaults_power() {
        let m = Machine::from_json(r#"{"cores":2,"freq_ghz":[1.0,2.0]}"#).unwrap();
        assert_eq!(m.power_levels(), &[1.0, 8.0]);
        let back = Machine::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn taskset_file_round_trip() {
        let set = generate_taskset(5, 9);
        assert_eq!(TaskSet::from_json(&set.to_json()).unwrap(), set);
        let bad = r#"{"tasks":[{"id":1,"workload":3,"max_width":1}]}"#;
        assert!(TaskSet::from_json(bad).is_err());
    }
}
