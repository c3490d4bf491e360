use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use moldsched::bench::{
    export_gantt, run_suite, tabulate_energy_relative, tabulate_optimal, tabulate_timeouts,
    write_results_csv, SuiteConfig, Table,
};
use moldsched::milp::{export_lp, SolveOptions};
use moldsched::schedulers::solve_instance_with;
use moldsched::{
    build_model, generate_taskset, validate, Machine, ProblemInstance, Schedule, SchedulerKind, SolveStatus,
    TaskSet,
};

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "moldsched", version, about = "Energy-optimal scheduling of moldable tasks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic task set.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one scheduler model and write the schedule.
    Schedule {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a schedule against its task set and machine.
    Validate {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        machine: PathBuf,
    },
    /// Run a benchmark suite and write results and tables.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Solve one cell at a time for uncontended timings.
        #[arg(long, conflicts_with = "workers")]
        serial: bool,
        #[arg(long)]
        workers: Option<usize>,
        /// Do not print the tables to stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// Write a scheduler model in CPLEX LP format.
    ExportLp {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw a schedule as an SVG Gantt chart.
    Gantt {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ProblemArgs {
    /// Task set JSON.
    #[arg(long)]
    tasks: PathBuf,
    /// Machine JSON.
    #[arg(long)]
    machine: PathBuf,
    /// One of unrestricted, allocpow2, group, crown.
    #[arg(long)]
    scheduler: SchedulerKind,
    /// Deadline in seconds.
    #[arg(long, conflicts_with = "d")]
    deadline: Option<f64>,
    /// Deadline factor; defaults to 0.8 on 4 cores and 1.0 otherwise.
    #[arg(long)]
    d: Option<f64>,
    /// Solver wall-clock limit in seconds.
    #[arg(long, default_value_t = 300.0)]
    timeout: f64,
}

impl ProblemArgs {
    fn instance(&self) -> Result<ProblemInstance> {
        let tasks = TaskSet::load_json(&self.tasks)?;
        let machine = load_machine(&self.machine)?;
        let inst = match self.deadline {
            Some(m) => ProblemInstance::new(tasks, machine, m)?,
            None => {
                let d = self.d.unwrap_or(if machine.core_count() == 4 { 0.8 } else { 1.0 });
                ProblemInstance::with_factor(tasks, machine, d)?
            }
        };
        Ok(inst)
    }
}

fn load_machine(path: &Path) -> Result<Machine> {
    Ok(Machine::load_json(path)?)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Instance a schedule file refers to: its own deadline with the given tasks and machine.
fn schedule_instance(schedule: &Path, tasks: &Path, machine: &Path) -> Result<(Schedule, ProblemInstance)> {
    let schedule = Schedule::load_json(schedule)?;
    let inst = ProblemInstance::new(TaskSet::load_json(tasks)?, load_machine(machine)?, schedule.deadline)?;
    Ok((schedule, inst))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Generate { n, seed, out } => {
            if n == 0 {
                return Err(moldsched::Error::InvalidInput("--n must be positive".into()).into());
            }
            write(&out, &generate_taskset(n, seed).to_json())?;
            Ok(0)
        }
        Command::Schedule { problem, out } => {
            let inst = problem.instance()?;
            let opts = SolveOptions::with_time_limit(problem.timeout);
            let (result, schedule) = solve_instance_with(&inst, problem.scheduler, &opts)?;
            eprintln!(
                "{}: status {}, objective {}, nodes {}, {:.3} s",
                problem.scheduler, result.status, result.objective, result.nodes, result.wall_time
            );
            match schedule {
                Some(s) => {
                    write(&out, &s.to_json())?;
                    Ok(0)
                }
                None if result.status == SolveStatus::Infeasible => {
                    eprintln!("no schedule meets deadline {} s", inst.deadline);
                    Ok(EXIT_INFEASIBLE)
                }
                None => {
                    eprintln!("time limit reached without a feasible schedule");
                    Ok(EXIT_TIMEOUT)
                }
            }
        }
        Command::Validate { schedule, tasks, machine } => {
            let (schedule, inst) = schedule_instance(&schedule, &tasks, &machine)?;
            let violations = validate(&schedule, &inst);
            if violations.is_empty() {
                eprintln!("ok: {} tasks, {} J", schedule.entries.len(), schedule.total_energy);
                return Ok(0);
            }
            for v in &violations {
                eprintln!("{v}");
            }
            Ok(EXIT_INFEASIBLE)
        }
        Command::Bench { config, out_dir, serial, workers, quiet } => {
            let cfg = SuiteConfig::load_json(&config)?;
            let workers = if serial {
                1
            } else {
                workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            };
            fs::create_dir_all(&out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
            let results = run_suite(&cfg, workers)?;
            let csv_path = out_dir.join("results.csv");
            let file = fs::File::create(&csv_path)
                .with_context(|| format!("cannot write {}", csv_path.display()))?;
            write_results_csv(&results, file)?;

            let mut tables: Vec<(&str, Table)> = vec![
                ("timeouts", tabulate_timeouts(&results).render()),
                ("optimal", tabulate_optimal(&results).render()),
            ];
            match tabulate_energy_relative(&results) {
                Ok(t) => {
                    write(&out_dir.join("energy_relative.csv"), &t.render(6).to_csv())?;
                    write(&out_dir.join("energy_relative.txt"), &t.render(2).to_text())?;
                    tables.push(("energy relative to unrestricted", t.render(2)));
                }
                Err(e) => eprintln!("energy table skipped: {e}"),
            }
            for (name, table) in &tables[..2] {
                write(&out_dir.join(format!("{name}.csv")), &table.to_csv())?;
                write(&out_dir.join(format!("{name}.txt")), &table.to_text())?;
            }
            if !quiet {
                for (name, table) in &tables {
                    println!("{name}\n{}", table.to_text());
                }
            }
            Ok(0)
        }
        Command::ExportLp { problem, out } => {
            let inst = problem.instance()?;
            let built = build_model(&inst, problem.scheduler)?;
            write(&out, &export_lp(&built.model))?;
            Ok(0)
        }
        Command::Gantt { schedule, tasks, machine, out } => {
            let (schedule, inst) = schedule_instance(&schedule, &tasks, &machine)?;
            write(&out, &export_gantt(&schedule, &inst))?;
            Ok(0)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use moldsched::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::InfeasibleSchedule(_)) => EXIT_INFEASIBLE,
        Some(E::BudgetExceeded(_)) | Some(E::Unbounded) => EXIT_INFEASIBLE,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
