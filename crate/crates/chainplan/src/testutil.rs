//! Shared fixtures for unit tests: a desk-scale planar dual-arm cell
//! holding a bar-shaped object over a table.

use crate::arm::ArmModel;
use crate::geom::{ConvexPolygon, Segment};
use crate::pose::Pose;
use crate::world::{CompositeConfig, Environment, GraspSet, ObjectModel, WorldDescription};
use std::f64::consts::PI;

pub fn dual_arm_world() -> (WorldDescription, GraspSet) {
    let arm_a = ArmModel::new(
        Pose::planar(0.0, 0.4, 0.0),
        vec![0.5, 0.4, 0.3],
        vec![-PI, -PI, -PI],
        vec![PI, PI, PI],
    )
    .unwrap();
    let arm_b = ArmModel::new(
        Pose::planar(1.1, 0.4, 0.0),
        vec![0.5, 0.4, 0.3],
        vec![-PI, -PI, -PI],
        vec![PI, PI, PI],
    )
    .unwrap();
    let world = WorldDescription {
        arms: vec![arm_a, arm_b],
        object: ObjectModel {
            polygon: ConvexPolygon::new(vec![
                [-0.2, -0.05],
                [0.2, -0.05],
                [0.2, 0.05],
                [-0.2, 0.05],
            ])
            .unwrap(),
            mass: 1.0,
            com: [0.0, 0.0],
        },
        environment: Environment {
            supports: vec![Segment::new([-0.3, 0.0], [1.4, 0.0])],
            obstacles: vec![],
        },
        friction_mu: 0.5,
        grip_force_max: 50.0,
        link_inflation: 0.01,
    };
    let grasps = GraspSet(vec![
        Pose::planar(-0.2, 0.0, 0.0),
        Pose::planar(0.2, 0.0, PI),
    ]);
    (world, grasps)
}

/// Chain-closed configuration at `t_obj` with the requested elbow signs
/// (+1 up, -1 down) per arm; None when a class is unreachable.
pub fn closed_config(
    world: &WorldDescription,
    grasps: &GraspSet,
    t_obj: &Pose,
    classes: &[i8],
) -> Option<CompositeConfig> {
    let mut qs = Vec::new();
    for (i, arm) in world.arms.iter().enumerate() {
        let sols = arm.enumerate_ik(&grasps.ee_target(t_obj, i));
        let q = sols
            .into_iter()
            .find(|s| (s.0[1] >= 0.0) == (classes[i] >= 0))?;
        qs.push(q);
    }
    Some(CompositeConfig::new(qs, t_obj.clone()))
}
