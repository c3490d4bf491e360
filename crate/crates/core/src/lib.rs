//! Exact energy-minimal scheduling of independent moldable tasks on a
//! multicore with per-core discrete frequency scaling and a common deadline.
//!
//! Four schedulers with progressively tighter search spaces are expressed as
//! integer linear programs and solved by the bundled branch-and-bound solver:
//!
//! * `Unrestricted`: any width, any core subset, any order.
//! * `AllocPow2`: widths restricted to powers of two.
//! * `Group`: tasks mapped onto the binary tree of aligned core groups.
//! * `Crown`: group mapping plus a fixed execution order, larger groups first.
//!
//! ```
//! use moldsched::{solve_instance, Machine, ProblemInstance, SchedulerKind, TaskSet};
//!
//! let tasks = TaskSet::from_pairs(&[(2, 2)]).unwrap();
//! let machine = Machine::new(2, vec![1.0, 2.0], vec![1.0, 8.0]).unwrap();
//! let inst = ProblemInstance::new(tasks, machine, 2.0).unwrap();
//! let (result, schedule) = solve_instance(&inst, SchedulerKind::Crown, 10.0).unwrap();
//! assert!((schedule.unwrap().total_energy - 2.0).abs() < 1e-9);
//! # let _ = result;
//! ```

pub mod bench;
pub mod error;
pub mod milp;
pub mod schedulers;
pub mod taskmodel;
pub mod validate;

pub use error::{Error, Result};
pub use milp::{MilpModel, SolveResult, SolveStatus};
pub use schedulers::{
    build_model, extract_schedule, solve_instance, BuiltModel, Schedule, ScheduleEntry, SchedulerKind,
};
pub use taskmodel::{
    deadline, energy, generate_taskset, runtime, CoreGroup, Machine, ProblemInstance, Task, TaskSet,
};
pub use validate::{oracle_optimal, validate, Violation, ViolationKind};
