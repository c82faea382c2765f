//! Build the bundled scenario files programmatically.
//!
//! Demonstrates how to assemble a world, a grasp set and a chain-closed
//! start configuration from scratch. Running this example rewrites the
//! JSON files under `scenarios/`.
//!
//! ```bash
//! cargo run --example make_scenarios
//! ```

use chainplan::arm::ArmModel;
use chainplan::geom::{ConvexPolygon, Segment};
use chainplan::planner::{GoalHeuristic, PlannerParams};
use chainplan::pose::{Pose, PoseBounds};
use chainplan::scenario::ScenarioFile;
use chainplan::world::{CompositeConfig, Environment, GraspSet, ObjectModel, WorldDescription};
use std::f64::consts::PI;

fn bar_object() -> ObjectModel {
    ObjectModel {
        polygon: ConvexPolygon::new(vec![
            [-0.2, -0.05],
            [0.2, -0.05],
            [0.2, 0.05],
            [-0.2, 0.05],
        ])
        .unwrap(),
        mass: 1.0,
        com: [0.0, 0.0],
    }
}

fn arm(base_x: f64, q1_lo: f64) -> ArmModel {
    ArmModel::new(
        Pose::planar(base_x, 0.45, 0.0),
        vec![0.5, 0.4, 0.3],
        vec![q1_lo, -2.9, -4.6],
        vec![2.9, 2.9, 4.6],
    )
    .unwrap()
}

fn grasps() -> GraspSet {
    GraspSet(vec![
        Pose::planar(-0.2, 0.0, 0.0),
        Pose::planar(0.2, 0.0, PI),
    ])
}

/// Chain-closed start with chosen elbow signs per arm.
fn start_config(
    world: &WorldDescription,
    grasps: &GraspSet,
    t_obj: &Pose,
    classes: [i8; 2],
) -> CompositeConfig {
    let mut qs = Vec::new();
    for (i, arm) in world.arms.iter().enumerate() {
        let sols = arm.enumerate_ik(&grasps.ee_target(t_obj, i));
        let q = sols
            .into_iter()
            .find(|s| (s.0[1] >= 0.0) == (classes[i] >= 0))
            .unwrap_or_else(|| panic!("arm {i} has no IK solution in the requested class"));
        qs.push(q);
    }
    CompositeConfig::new(qs, t_obj.clone())
}

fn base_params() -> PlannerParams {
    PlannerParams {
        n_max: 2000,
        r_max: 1,
        bounds: PoseBounds::Planar {
            min: [0.3, 0.85],
            max: [0.8, 1.1],
        },
        goal_heuristic: GoalHeuristic::NearestToStart,
        ..PlannerParams::default()
    }
}

/// Carry the bar from the left of the cell to the right. The right arm's
/// shoulder cannot swing low, so its elbow-up class only covers the left
/// part of the band and its elbow-down class only the right: the start
/// (elbow up) and every goal composite (elbow down) sit in
/// configuration-space components no continuous closed-chain motion
/// connects, and the planner must park the bar on the table where both
/// classes overlap and let the right arm jump classes.
fn shoulder_trap(start_x: f64, goal_x: f64, obstacles: Vec<Segment>) -> ScenarioFile {
    let world = WorldDescription {
        arms: vec![arm(0.0, -2.9), arm(1.1, 0.7)],
        object: bar_object(),
        environment: Environment {
            supports: vec![Segment::new([0.35, 0.7], [0.75, 0.7])],
            obstacles,
        },
        friction_mu: 0.5,
        grip_force_max: 50.0,
        link_inflation: 0.01,
    };
    let grasps = grasps();
    let t_start = Pose::planar(start_x, 0.9, 0.0);
    let start = start_config(&world, &grasps, &t_start, [-1, 1]);
    ScenarioFile {
        schema_version: "1".into(),
        world,
        grasp_set: grasps,
        start,
        goal_pose: Pose::planar(goal_x, 0.95, 0.0),
        params: base_params(),
    }
}

/// Free-space transport: generous wrist ranges, nearby goal, no regrasp.
fn free_transport() -> ScenarioFile {
    let world = WorldDescription {
        arms: vec![arm(0.0, -2.9), arm(1.1, -2.9)],
        object: bar_object(),
        environment: Environment {
            supports: vec![Segment::new([0.35, 0.7], [0.75, 0.7])],
            obstacles: vec![],
        },
        friction_mu: 0.5,
        grip_force_max: 50.0,
        link_inflation: 0.01,
    };
    let grasps = grasps();
    let t_start = Pose::planar(0.45, 0.95, 0.0);
    let start = start_config(&world, &grasps, &t_start, [-1, 1]);
    ScenarioFile {
        schema_version: "1".into(),
        world,
        grasp_set: grasps,
        start,
        goal_pose: Pose::planar(0.6, 1.0, 0.3),
        params: PlannerParams {
            r_max: 0,
            ..base_params()
        },
    }
}

fn write(name: &str, scenario: &ScenarioFile) {
    scenario.validate().expect(name);
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(scenario).unwrap();
    std::fs::write(&path, text + "\n").unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    // open table under the class-overlap corridor
    write("shoulder_trap.json", &shoulder_trap(0.35, 0.7, vec![]));
    // a shelf blocks the descent over the left part of the corridor:
    // regrasp requests hosted there fail in stage 2 and force tree
    // reorganization before a request further right succeeds
    write(
        "shoulder_trap_blocked.json",
        &shoulder_trap(0.35, 0.7, vec![Segment::new([0.30, 0.83], [0.44, 0.83])]),
    );
    write("free_transport.json", &free_transport());
}
