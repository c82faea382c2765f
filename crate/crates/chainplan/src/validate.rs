//! Replay validation of emitted plans: every waypoint must close the chain
//! and be collision-free, and every instant with an open grasp must be
//! statically feasible with the remaining contacts.

use crate::equilibrium::{
    equilibrium_feasible, grasp_contacts, gravito_inertial_wrench, support_contacts, Contact,
    GRAVITY,
};
use crate::plan::{CompositePlan, FlatStep, StepPhase};
use crate::world::{
    collision_free, grasp_residual, CollisionContext, CompositeConfig, GraspSet,
    WorldDescription, CHAIN_CLOSED_TOL,
};

/// First check that failed during replay.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub phase_index: usize,
    pub step: usize,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "phase {} step {}: {}",
            self.phase_index, self.step, self.message
        )
    }
}

/// Contact-detection tolerance used when recomputing support contacts for
/// the equilibrium replay. Looser than the placement sampler's tolerance so
/// serialized poses round-trip safely.
const REPLAY_CONTACT_TOL: f64 = 1e-6;

/// Largest per-joint jump tolerated between consecutive replay steps.
const STEP_JUMP_TOL: f64 = 0.35;

/// Replay every step of the plan through the chain-closure, collision and
/// equilibrium checks. Returns the first violation found.
pub fn validate_plan(
    plan: &CompositePlan,
    world: &WorldDescription,
    grasps: &GraspSet,
    w_rot: f64,
) -> Result<(), Violation> {
    if plan.phases.is_empty() {
        return Err(Violation {
            phase_index: 0,
            step: 0,
            message: "plan has no phases".into(),
        });
    }
    let steps = plan.flatten_steps();
    if steps.is_empty() {
        return Err(Violation {
            phase_index: 0,
            step: 0,
            message: "plan has no waypoints".into(),
        });
    }

    let mut prev: Option<&FlatStep> = None;
    for (i, step) in steps.iter().enumerate() {
        let fail = |message: String| Violation {
            phase_index: step.phase_index,
            step: i,
            message,
        };

        if step.arm_configs.len() != world.arm_count() {
            return Err(fail("arm count mismatch".into()));
        }
        for (a, (arm, q)) in world.arms.iter().zip(&step.arm_configs).enumerate() {
            if !arm.within_limits(q, 1e-9) {
                return Err(fail(format!("arm {a} violates joint limits")));
            }
        }

        if let Some(p) = prev {
            let jump = step
                .arm_configs
                .iter()
                .zip(&p.arm_configs)
                .map(|(a, b)| a.max_abs_diff(b))
                .fold(0.0, f64::max);
            if jump > STEP_JUMP_TOL {
                return Err(fail(format!("joint jump {jump:.3} rad between steps")));
            }
        }

        let config = CompositeConfig::new(step.arm_configs.clone(), step.object_pose.clone());
        let residuals = grasp_residual(&config, grasps, world, w_rot);
        for (a, r) in residuals.iter().enumerate() {
            let released = step.released_arm == Some(a);
            // at the open instant the gripper is still at its grasp pose
            let must_close = !released || step.phase == StepPhase::Open;
            if must_close && *r > CHAIN_CLOSED_TOL {
                return Err(fail(format!(
                    "arm {a} grasp residual {r:.3e} exceeds {CHAIN_CLOSED_TOL:.0e}"
                )));
            }
        }

        let ctx = CollisionContext {
            allow_support_contact: step.phase != StepPhase::Transport,
            grasp_excluded: vec![true; world.arm_count()],
        };
        if !collision_free(&config, world, &ctx) {
            return Err(fail("collision".into()));
        }

        if let Some(released) = step.released_arm {
            let mut contacts: Vec<Contact> = Vec::new();
            for sup in &world.environment.supports {
                contacts.extend(support_contacts(
                    world,
                    &step.object_pose,
                    sup,
                    REPLAY_CONTACT_TOL,
                ));
            }
            contacts.extend(grasp_contacts(&step.object_pose, grasps, &[released]));
            let wrench = gravito_inertial_wrench(
                world.object.mass,
                world.com_world(&step.object_pose),
                GRAVITY,
            );
            if equilibrium_feasible(&wrench, &contacts, world.friction_mu, world.grip_force_max)
                .is_none()
            {
                return Err(fail(format!(
                    "no static equilibrium with arm {released} released"
                )));
            }
        }
        prev = Some(step);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::PlanPhase;
    use crate::testutil::{closed_config, dual_arm_world};
    use crate::pose::Pose;

    #[test]
    fn single_waypoint_plan_validates() {
        let (world, grasps) = dual_arm_world();
        let c = closed_config(&world, &grasps, &Pose::planar(0.55, 0.9, 0.0), &[-1, 1]).unwrap();
        let plan = CompositePlan::new(vec![PlanPhase::ClosedChain {
            waypoints: vec![c],
        }]);
        assert!(validate_plan(&plan, &world, &grasps, 0.3).is_ok());
    }

    #[test]
    fn tampered_joint_breaks_residual() {
        let (world, grasps) = dual_arm_world();
        let mut c =
            closed_config(&world, &grasps, &Pose::planar(0.55, 0.9, 0.0), &[-1, 1]).unwrap();
        c.arm_configs[1].0[0] += 0.1;
        let plan = CompositePlan::new(vec![PlanPhase::ClosedChain {
            waypoints: vec![c],
        }]);
        let v = validate_plan(&plan, &world, &grasps, 0.3).unwrap_err();
        assert!(v.message.contains("residual"), "{v}");
        assert_eq!(v.phase_index, 0);
    }
}
