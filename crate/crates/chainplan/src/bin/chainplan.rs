//! Thin CLI over the planning library. See the crate examples for the
//! library-level API.

use chainplan::commands::{self, PlanOverrides};
use chainplan::exec::{ControlGains, ExecOptions};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "chainplan", version, about = "Closed-chain multi-arm manipulation planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a scenario and write plan.json / stats.json.
    Plan {
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Random seed (overrides the scenario).
        #[arg(long)]
        seed: Option<u64>,
        /// Run several isolated queries, one thread per seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Regrasp budget (overrides the scenario).
        #[arg(long)]
        rmax: Option<u32>,
        /// Iteration budget (overrides the scenario).
        #[arg(long)]
        nmax: Option<u32>,
    },
    /// Replay a plan through the validity checks.
    Check { plan: PathBuf, scenario: PathBuf },
    /// Render SVG frames of a plan.
    Render {
        plan: PathBuf,
        scenario: PathBuf,
        #[arg(long, default_value = "frames")]
        out: PathBuf,
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
    },
    /// Execute a plan in the leader-follower compliance simulation.
    Simulate {
        plan: PathBuf,
        scenario: PathBuf,
        /// Trace output (JSON lines).
        #[arg(long, default_value = "trace.jsonl")]
        out: PathBuf,
        /// Follower base offset in meters, e.g. 0.005,0.0
        #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 0.0])]
        offset: Vec<f64>,
        /// Proportional force gain (all axes).
        #[arg(long)]
        kp: Option<f64>,
        /// Derivative force gain (all axes).
        #[arg(long)]
        kv: Option<f64>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("CHAINPLAN_LOG")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Plan {
            scenario,
            out,
            seed,
            seeds,
            rmax,
            nmax,
        } => commands::run_plan(
            &scenario,
            &out,
            &PlanOverrides {
                seed,
                seeds,
                rmax,
                nmax,
            },
        ),
        Command::Check { plan, scenario } => commands::check_path(&plan, &scenario),
        Command::Render {
            plan,
            scenario,
            out,
            fps,
        } => commands::render(&plan, &scenario, &out, fps),
        Command::Simulate {
            plan,
            scenario,
            out,
            offset,
            kp,
            kv,
        } => {
            let mut opts = ExecOptions {
                follower_base_offset: [offset[0], offset[1]],
                ..ExecOptions::default()
            };
            let mut gains = ControlGains::default();
            if let Some(kp) = kp {
                gains.k_p = [kp; 3];
            }
            if let Some(kv) = kv {
                gains.k_v = [kv; 3];
            }
            opts.gains = gains;
            commands::simulate(&plan, &scenario, &out, &opts)
        }
    };
    std::process::exit(code);
}
