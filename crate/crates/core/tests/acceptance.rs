//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use moldsched::bench::{run_suite, BenchResult, SuiteConfig};
use moldsched::milp::{export_lp, import_solution, parse_lp, solve, write_solution, MilpModel, Relation};
use moldsched::schedulers::{build_model, solve_instance, SchedulerKind};
use moldsched::taskmodel::{deadline_for_workload, generate_taskset, Machine};
use moldsched::validate::{oracle_optimal, validate, OracleOutcome};
use moldsched::{ProblemInstance, SolveStatus, TaskSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REL_TOL: f64 = 1e-6;

fn rel_le(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs()).max(1e-12)
}

fn rel_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

fn desk_d(p: u32) -> f64 {
    if p == 8 {
        1.0
    } else {
        0.8
    }
}

fn instance(n: usize, p: u32, levels: usize, seed: u64) -> ProblemInstance {
    let machine = Machine::evenly_spaced(p, 0.6, 1.6, levels).unwrap();
    ProblemInstance::with_factor(generate_taskset(n, seed), machine, desk_d(p)).unwrap()
}

fn workers() -> usize {
    thread::available_parallelism().map_or(2, |n| n.get())
}

/// Maps `f` over `items` on a small thread pool, keeping order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = Mutex::new(0usize);
    let out: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..workers().min(items.len().max(1)) {
            s.spawn(|| loop {
                let i = {
                    let mut g = next.lock().unwrap();
                    let i = *g;
                    *g += 1;
                    i
                };
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *out[i].lock().unwrap() = Some(r);
            });
        }
    });
    out.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect()
}

type Outcome = Result<String, String>;

fn criterion_1() -> Outcome {
    let mut cases = Vec::new();
    for seed in 0..50u64 {
        let n = 2 + (seed % 2) as usize;
        let p = if (seed / 2) % 2 == 0 { 2 } else { 4 };
        cases.push(instance(n, p, 2, 1000 + seed));
    }
    let checks = par_map(&cases, |inst| {
        let mut errors = Vec::new();
        for kind in SchedulerKind::ALL {
            let oracle = oracle_optimal(inst, kind).unwrap();
            let (r, _) = solve_instance(inst, kind, 300.0).unwrap();
            match oracle {
                OracleOutcome::Infeasible if r.status == SolveStatus::Infeasible => {}
                OracleOutcome::Optimal(e)
                    if r.status == SolveStatus::Optimal && rel_eq(r.objective, e, REL_TOL) => {}
                other => errors.push(format!(
                    "n={} p={} {kind}: solver {} {} vs oracle {other:?}",
                    inst.n(),
                    inst.p(),
                    r.status,
                    r.objective
                )),
            }
        }
        errors
    });
    let errors: Vec<String> = checks.into_iter().flatten().collect();
    if errors.is_empty() {
        Ok(format!("{} instances x 4 schedulers agree with the oracle", cases.len()))
    } else {
        Err(errors.join("; "))
    }
}

/// Objectives of the four schedulers for instances where all four are Optimal.
struct ChainData {
    objectives: Vec<[f64; 4]>,
    skipped_infeasible: usize,
    not_all_optimal: usize,
}

fn chain_data() -> ChainData {
    let seeds: Vec<u64> = (0..60).map(|s| 2000 + s).collect();
    let solved = par_map(&seeds, |&seed| {
        let inst = instance(4, 4, 3, seed);
        SchedulerKind::ALL.map(|kind| {
            let (r, s) = solve_instance(&inst, kind, 120.0).unwrap();
            if let Some(s) = &s {
                assert!(validate(s, &inst).is_empty(), "seed {seed} {kind}: infeasible schedule");
            }
            (r.status, r.objective)
        })
    });
    let mut data = ChainData { objectives: Vec::new(), skipped_infeasible: 0, not_all_optimal: 0 };
    for row in solved {
        if data.objectives.len() == 30 {
            break;
        }
        if row.iter().all(|(s, _)| *s == SolveStatus::Infeasible) {
            data.skipped_infeasible += 1;
        } else if row.iter().all(|(s, _)| *s == SolveStatus::Optimal) {
            data.objectives.push(row.map(|(_, o)| o));
        } else {
            data.not_all_optimal += 1;
        }
    }
    data
}

fn criterion_2(data: &ChainData) -> Outcome {
    if data.objectives.len() < 30 {
        return Err(format!(
            "only {} all-optimal instances ({} not all optimal)",
            data.objectives.len(),
            data.not_all_optimal
        ));
    }
    for (i, obj) in data.objectives.iter().enumerate() {
        if !obj.windows(2).all(|w| rel_le(w[0], w[1])) {
            return Err(format!("instance {i}: chain broken {obj:?}"));
        }
    }
    Ok(format!(
        "30 instances satisfy U <= A <= G <= C ({} all-infeasible skipped, {} not all optimal)",
        data.skipped_infeasible, data.not_all_optimal
    ))
}

fn criterion_3(data: &ChainData, suite: &[BenchResult]) -> Outcome {
    let mut ratios = Vec::new();
    for obj in &data.objectives {
        ratios.extend(obj[1..].iter().map(|e| e / obj[0]));
    }
    for r in suite.iter().filter(|r| r.n == 4 && r.scheduler != SchedulerKind::Unrestricted) {
        let same = |k: SchedulerKind| {
            suite.iter().find(|b| {
                b.scheduler == k && b.machine == r.machine && b.n == r.n && b.set_index == r.set_index
            })
        };
        let all_optimal =
            SchedulerKind::ALL.iter().all(|&k| same(k).is_some_and(|b| b.status == SolveStatus::Optimal));
        if all_optimal {
            ratios.push(r.energy_j.unwrap() / same(SchedulerKind::Unrestricted).unwrap().energy_j.unwrap());
        }
    }
    if ratios.is_empty() {
        return Err("no all-optimal instances at n = 4".into());
    }
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let avg = ratios.iter().sum::<f64>() / ratios.len() as f64;
    if worst >= 1.0 - REL_TOL {
        Ok(format!("{} ratios, min {worst:.4}, mean {avg:.4}", ratios.len()))
    } else {
        Err(format!("ratio {worst} below 1"))
    }
}

fn desk_suite() -> Result<Vec<BenchResult>, String> {
    let mut cfg = SuiteConfig::desk();
    cfg.time_limit = 120.0;
    run_suite(&cfg, workers()).map_err(|e| e.to_string())
}

fn criterion_4(suite: &[BenchResult]) -> Outcome {
    let at4: Vec<&BenchResult> = suite.iter().filter(|r| r.n == 4).collect();
    let timeouts: Vec<String> = at4
        .iter()
        .filter(|r| r.status == SolveStatus::TimeLimit)
        .map(|r| format!("{} p={} set {}", r.scheduler, r.machine, r.set_index))
        .collect();
    if at4.is_empty() {
        return Err("no n = 4 results".into());
    }
    if timeouts.is_empty() {
        Ok(format!("0 timeouts in {} n = 4 solves (p in {{2, 4}}, 120 s limit)", at4.len()))
    } else {
        Err(format!("timeouts: {}", timeouts.join(", ")))
    }
}

fn criterion_5() -> Outcome {
    let seeds: Vec<u64> = (0..10).map(|s| 5000 + s).collect();
    let rows = par_map(&seeds, |&seed| {
        let inst = instance(6, 4, 3, seed);
        let (u, _) = solve_instance(&inst, SchedulerKind::Unrestricted, 30.0).unwrap();
        let (c, _) = solve_instance(&inst, SchedulerKind::Crown, 30.0).unwrap();
        (u.nodes, u.status, c.nodes, c.status)
    });
    let fewer = rows.iter().filter(|(u, _, c, _)| c < u).count();
    let share = fewer as f64 / rows.len() as f64;
    let detail: Vec<String> = rows
        .iter()
        .map(|(u, us, c, _)| format!("{c}/{u}{}", if *us == SolveStatus::TimeLimit { "+" } else { "" }))
        .collect();
    let msg = format!(
        "crown explored fewer nodes on {fewer}/{} instances (crown/unrestricted: {})",
        rows.len(),
        detail.join(" ")
    );
    if share >= 0.8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_6() -> Outcome {
    let mut checked = 0;
    for p in [2u32, 4, 8] {
        for n in [1usize, 2, 4, 8] {
            for k in [1usize, 2, 3] {
                let inst = instance(n, p, k, 42);
                let (pu, nu, ku) = (p as usize, n, k);
                let u = build_model(&inst, SchedulerKind::Unrestricted).unwrap().model.num_vars();
                let c = build_model(&inst, SchedulerKind::Crown).unwrap().model.num_vars();
                if u != 2 * pu * nu * ku + nu * nu + 2 * nu {
                    return Err(format!("unrestricted p={p} n={n} K={k}: {u} variables"));
                }
                if c != (2 * pu - 1) * nu * ku {
                    return Err(format!("crown p={p} n={n} K={k}: {c} variables"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (p, n, K) combinations match both formulas"))
}

fn criterion_7(suite: &Result<Vec<BenchResult>, String>) -> Outcome {
    // run_suite itself fails on any violation or energy mismatch.
    let suite = suite.as_ref().map_err(|e| format!("desk suite failed: {e}"))?;
    let cfg = SuiteConfig::desk();
    let mut cells = Vec::new();
    for &p in &cfg.machine_sizes {
        for &n in &cfg.task_set_sizes {
            for set in 0..cfg.sets_per_size {
                cells.push((p, n, set));
            }
        }
    }
    let checks = par_map(&cells, |&(p, n, set)| {
        let inst = cfg.instance(p, n, set).unwrap();
        let mut errors = Vec::new();
        for kind in SchedulerKind::ALL {
            let (r, s) = solve_instance(&inst, kind, 120.0).unwrap();
            let Some(s) = s else { continue };
            let v = validate(&s, &inst);
            if !v.is_empty() {
                errors.push(format!("{kind} p={p} n={n} set {set}: {}", v[0]));
            }
            if !rel_eq(s.recomputed_energy(&inst), r.objective, REL_TOL) {
                errors.push(format!("{kind} p={p} n={n} set {set}: energy mismatch"));
            }
        }
        errors
    });
    let errors: Vec<String> = checks.into_iter().flatten().collect();
    let with_schedule = suite.iter().filter(|r| r.energy_j.is_some()).count();
    if errors.is_empty() {
        Ok(format!("{with_schedule} suite schedules valid; independent re-check clean"))
    } else {
        Err(errors.join("; "))
    }
}

fn criterion_8() -> Outcome {
    let machine = Machine::default_with_cores(4).unwrap();
    let m = deadline_for_workload(100.0, &machine, 0.8);
    let tasks = TaskSet::from_pairs(&[(60, 2), (40, 1)]).unwrap();
    let via_tasks = moldsched::deadline(&tasks, &machine, 0.8);
    // 0.8 * (100 / 6.4 + 200 / 2.4) / 2 = 475 / 12
    let expected = 475.0 / 12.0;
    if (m - expected).abs() <= 1e-9 && (via_tasks - expected).abs() <= 1e-9 {
        Ok(format!("M = {m:.9} s"))
    } else {
        Err(format!("M = {m}, via tasks {via_tasks}, expected {expected}"))
    }
}

fn enumerate(model: &MilpModel) -> Option<f64> {
    let b = model.num_vars();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << b) {
        let x: Vec<f64> = (0..b).map(|i| ((mask >> i) & 1) as f64).collect();
        if model.first_violation(&x, 1e-9).is_none() {
            let obj = model.objective_value(&x);
            best = Some(best.map_or(obj, |v: f64| v.min(obj)));
        }
    }
    best
}

fn random_binary_model(rng: &mut ChaCha8Rng) -> MilpModel {
    let b = rng.gen_range(1..=12);
    let mut model = MilpModel::new();
    let vars: Vec<_> = (0..b).map(|i| model.add_binary(format!("b{i}"))).collect();
    model.set_objective(vars.iter().map(|&v| (v, rng.gen_range(-10..=10) as f64)).collect());
    for _ in 0..rng.gen_range(0..=5) {
        let expr = vars.iter().map(|&v| (v, rng.gen_range(-5..=5) as f64)).collect();
        let rel = [Relation::Le, Relation::Ge, Relation::Eq][rng.gen_range(0..3)];
        model.add_constraint(expr, rel, rng.gen_range(-6..=8) as f64);
    }
    model
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut models: Vec<(String, MilpModel)> =
        (0..300).map(|i| (format!("random #{i}"), random_binary_model(&mut rng))).collect();
    // Crown models are purely binary; these stay within 12 binaries.
    for (n, levels, seed) in
        [(1usize, 1usize, 1u64), (1, 2, 2), (1, 3, 3), (2, 1, 4), (2, 2, 5), (3, 1, 6), (4, 1, 7)]
    {
        let inst = instance(n, 2, levels, seed);
        let model = build_model(&inst, SchedulerKind::Crown).unwrap().model;
        assert!(model.num_vars() <= 12);
        models.push((format!("crown n={n} K={levels}"), model));
    }
    let mut optimal = 0;
    for (name, model) in &models {
        let r = solve(model, 60.0).map_err(|e| format!("{name}: {e}"))?;
        match enumerate(model) {
            None if r.status == SolveStatus::Infeasible => {}
            Some(best)
                if r.status == SolveStatus::Optimal
                    && (r.objective - best).abs() <= REL_TOL * best.abs().max(1.0) =>
            {
                optimal += 1;
                let parsed = parse_lp(&export_lp(model)).map_err(|e| format!("{name}: {e}"))?;
                let again = solve(&parsed, 60.0).map_err(|e| format!("{name}: {e}"))?;
                let imported = import_solution(model, &write_solution(model, r.assignment.as_ref().unwrap()))
                    .map_err(|e| format!("{name}: {e}"))?;
                for (what, obj) in
                    [("re-parsed model", again.objective), ("imported solution", imported.objective)]
                {
                    if (obj - r.objective).abs() > 1e-9 * r.objective.abs().max(1.0) {
                        return Err(format!("{name}: {what} objective {obj} vs {}", r.objective));
                    }
                }
            }
            other => {
                return Err(format!("{name}: solver {} {} vs enumeration {other:?}", r.status, r.objective))
            }
        }
    }
    // Round trip on the larger mixed scheduler models too.
    for kind in SchedulerKind::ALL {
        let inst = instance(3, 4, 2, 77);
        let model = build_model(&inst, kind).unwrap().model;
        let r = solve(&model, 120.0).map_err(|e| e.to_string())?;
        let parsed = parse_lp(&export_lp(&model)).map_err(|e| e.to_string())?;
        let again = solve(&parsed, 120.0).map_err(|e| e.to_string())?;
        if r.status != again.status
            || (r.has_incumbent()
                && (r.objective - again.objective).abs() > 1e-9 * r.objective.abs().max(1.0))
        {
            return Err(format!("{kind}: round trip changed the optimum"));
        }
    }
    Ok(format!("{} models match enumeration ({optimal} feasible); LP round trips exact", models.len()))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let suite = desk_suite();
    let chain = chain_data();
    let empty = Vec::new();
    let suite_rows = suite.as_ref().unwrap_or(&empty);

    let outcomes: Vec<(&str, Outcome)> = vec![
        ("oracle equivalence", criterion_1()),
        ("nesting chain", criterion_2(&chain)),
        ("energy ratios >= 1 at n = 4", criterion_3(&chain, suite_rows)),
        ("zero timeouts at n = 4", suite.as_ref().map_err(|e| e.clone()).and_then(|s| criterion_4(s))),
        ("crown explores fewer nodes", criterion_5()),
        ("model-size formulas", criterion_6()),
        ("feasibility of extracted schedules", criterion_7(&suite)),
        ("deadline formula spot check", criterion_8()),
        ("solver unit suite", criterion_9()),
    ];
    let mut failed = 0;
    for (i, (name, outcome)) in outcomes.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        outcomes.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
