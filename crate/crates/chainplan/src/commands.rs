//! Library entry points behind the CLI subcommands, returning process exit
//! codes: 0 success, 2 planner failure, 3 validation/schema/io error, 4 no
//! goal IK solution, 5 replay violation, 6 execution divergence.

use crate::exec::{simulate_execution, ExecOptions};
use crate::plan::CompositePlan;
use crate::planner::{plan_with_stats, PlanError, PlannerParams};
use crate::render::render_svg;
use crate::scenario::{load_scenario, ScenarioFile};
use crate::validate::validate_plan;
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PLANNER_FAILURE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NO_GOAL_IK: i32 = 4;
pub const EXIT_REPLAY_VIOLATION: i32 = 5;
pub const EXIT_DIVERGED: i32 = 6;

/// CLI overrides applied on top of the scenario's parameters.
#[derive(Debug, Clone, Default)]
pub struct PlanOverrides {
    pub seed: Option<u64>,
    pub seeds: Vec<u64>,
    pub rmax: Option<u32>,
    pub nmax: Option<u32>,
}

fn apply_overrides(base: &PlannerParams, o: &PlanOverrides, seed: u64) -> PlannerParams {
    let mut p = base.clone();
    p.seed = seed;
    if let Some(r) = o.rmax {
        p.r_max = r;
    }
    if let Some(n) = o.nmax {
        p.n_max = n;
    }
    p
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text)
}

/// Plan one query per seed and write `plan.json` / `stats.json` (suffixed
/// `_seed<k>` when several seeds run). Seeds run as isolated queries on
/// their own threads.
pub fn run_plan(scenario_path: &Path, out_dir: &Path, overrides: &PlanOverrides) -> i32 {
    let scenario = match load_scenario(scenario_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    if let Err(e) = std::fs::create_dir_all(out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return EXIT_VALIDATION;
    }

    let seeds: Vec<(u64, String)> = if overrides.seeds.is_empty() {
        let seed = overrides.seed.unwrap_or(scenario.params.seed);
        vec![(seed, String::new())]
    } else {
        overrides
            .seeds
            .iter()
            .map(|&s| (s, format!("_seed{s}")))
            .collect()
    };

    let runs: Vec<(u64, String, i32)> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|(seed, suffix)| {
                let scenario = &scenario;
                let overrides = overrides.clone();
                let out = out_dir.to_path_buf();
                let suffix = suffix.clone();
                let seed = *seed;
                scope.spawn(move || {
                    let code = plan_one(scenario, seed, &overrides, &out, &suffix);
                    (seed, suffix, code)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    for (seed, _, code) in &runs {
        if *code != EXIT_OK {
            eprintln!("seed {seed}: exit code {code}");
            return *code;
        }
    }
    EXIT_OK
}

fn plan_one(
    scenario: &ScenarioFile,
    seed: u64,
    overrides: &PlanOverrides,
    out_dir: &Path,
    suffix: &str,
) -> i32 {
    let params = apply_overrides(&scenario.params, overrides, seed);
    let (outcome, stats) = plan_with_stats(
        &scenario.start,
        &scenario.goal_pose,
        &scenario.grasp_set,
        &scenario.world,
        &params,
    );
    let stats_path = out_dir.join(format!("stats{suffix}.json"));
    match outcome {
        Ok(plan) => {
            if let Err(v) = validate_plan(&plan, &scenario.world, &scenario.grasp_set, params.w_rot)
            {
                eprintln!("internal error: emitted plan fails replay: {v}");
                return EXIT_VALIDATION;
            }
            let plan_path = out_dir.join(format!("plan{suffix}.json"));
            if write_json(&plan_path, &plan).is_err() || write_json(&stats_path, &stats).is_err() {
                eprintln!("error: cannot write outputs to {}", out_dir.display());
                return EXIT_VALIDATION;
            }
            println!(
                "plan: {} phases, {} regrasp action(s), {:.2}s ({} iterations)",
                plan.phases.len(),
                stats.regrasp_count,
                stats.total_s,
                stats.iterations
            );
            EXIT_OK
        }
        Err(PlanError::NoGoalIk(msg)) => {
            eprintln!("error: no goal IK solution: {msg}");
            EXIT_NO_GOAL_IK
        }
        Err(PlanError::Failure { iterations }) => {
            let _ = write_json(&stats_path, &stats);
            eprintln!("planner failure after {iterations} iterations");
            EXIT_PLANNER_FAILURE
        }
        Err(PlanError::InvalidStart(msg)) => {
            eprintln!("error: {msg}");
            EXIT_VALIDATION
        }
    }
}

fn load_plan(path: &Path) -> Result<CompositePlan, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let plan: CompositePlan = serde_json::from_str(&text).map_err(|e| {
        format!(
            "{}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })?;
    if plan.schema_version != crate::plan::SCHEMA_VERSION {
        return Err(format!(
            "unsupported plan schema_version {:?}",
            plan.schema_version
        ));
    }
    Ok(plan)
}

/// Replay every waypoint of the plan through the validity checks.
pub fn check_path(plan_path: &Path, scenario_path: &Path) -> i32 {
    let scenario = match load_scenario(scenario_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let plan = match load_plan(plan_path) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    match validate_plan(&plan, &scenario.world, &scenario.grasp_set, scenario.params.w_rot) {
        Ok(()) => {
            println!("plan valid: {} steps", plan.step_count());
            EXIT_OK
        }
        Err(v) => {
            eprintln!("violation at {v}");
            EXIT_REPLAY_VIOLATION
        }
    }
}

/// Render SVG frames of the plan.
pub fn render(plan_path: &Path, scenario_path: &Path, out_dir: &Path, fps: f64) -> i32 {
    let scenario = match load_scenario(scenario_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let plan = match load_plan(plan_path) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    match render_svg(&plan, &scenario, out_dir, fps) {
        Ok(names) => {
            println!("wrote {} frames to {}", names.len(), out_dir.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}

/// Execute the plan in the leader-follower compliance simulation and write
/// the trace as JSON lines.
pub fn simulate(
    plan_path: &Path,
    scenario_path: &Path,
    out_path: &Path,
    opts: &ExecOptions,
) -> i32 {
    let scenario = match load_scenario(scenario_path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let plan = match load_plan(plan_path) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let trace = simulate_execution(&plan, opts, &scenario.world, &scenario.grasp_set);
    if std::fs::write(out_path, trace.to_jsonl()).is_err() {
        eprintln!("error: cannot write {}", out_path.display());
        return EXIT_VALIDATION;
    }
    let peak = trace.max_abs_force_error();
    println!(
        "simulated {} steps, peak |f_e| {peak:.4} N{}",
        trace.records.len(),
        if trace.diverged { ", DIVERGED" } else { "" }
    );
    if trace.diverged {
        EXIT_DIVERGED
    } else {
        EXIT_OK
    }
}
