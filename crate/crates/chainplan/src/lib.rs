//! Closed-chain multi-arm manipulation planning.
//!
//! When several arms rigidly grasp one object the system moves on
//! lower-dimensional manifolds of the composite configuration space, and
//! joint limits can split those manifolds into components no continuous
//! motion connects. This crate plans object motions across such components
//! by inserting regrasp moves in which one arm releases, swings to a
//! different inverse-kinematics solution of the *same* grasp pose, and
//! regrasps while the environment supports the object.
//!
//! The crate is organized around a planar dual-arm testbed:
//!
//! - [`pose`]: rigid-body pose algebra, sampling, interpolation, metric
//! - [`arm`]: planar serial arms, analytic IK enumeration, differential IK
//! - [`world`]: composite configurations, grasp constraint, collision
//! - [`equilibrium`]: contact-wrench feasibility and placement sampling
//! - [`planner`]: two-stage bidirectional search over object poses
//! - [`ikswitch`]: regrasp-action planning at flagged tree vertices
//! - [`exec`]: leader-follower compliant execution simulation
//! - [`scenario`] / [`commands`]: file formats and the CLI entry points
//!
//! See the crate examples for runnable demonstrations of each capability.
//! Set `CHAINPLAN_LOG=debug` for a per-mutation audit log of the search
//! trees.

pub mod arm;
pub mod commands;
pub mod equilibrium;
pub mod exec;
pub mod geom;
pub mod ikswitch;
pub mod lp;
pub mod plan;
pub mod planner;
pub mod pose;
pub mod render;
pub mod scenario;
pub mod validate;
pub mod world;

#[cfg(test)]
pub(crate) mod testutil;

pub use arm::{ArmModel, DiffIkParams, JointConfig};
pub use plan::{CompositePlan, PlanPhase};
pub use planner::{plan, PlanError, PlanStats, PlannerParams};
pub use pose::{
    discretize_path, interpolate_pose_path, sample_object_pose, Pose, PoseBounds, PosePath,
};
pub use world::{CompositeConfig, GraspSet, WorldDescription};
