//! Scenario files: the world, the grasp set, the start configuration, the
//! goal object pose and planner parameter overrides, all in one JSON
//! document.

use crate::planner::PlannerParams;
use crate::pose::Pose;
use crate::world::{
    collision_free, grasp_residual, CollisionContext, CompositeConfig, GraspSet,
    WorldDescription, CHAIN_CLOSED_TOL,
};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: String,
    pub world: WorldDescription,
    pub grasp_set: GraspSet,
    pub start: CompositeConfig,
    pub goal_pose: Pose,
    #[serde(default)]
    pub params: PlannerParams,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let scenario: ScenarioFile =
        serde_json::from_str(&text).map_err(|e| ScenarioError::Json {
            path: path.display().to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    scenario
        .validate()
        .map_err(ScenarioError::Invalid)?;
    Ok(scenario)
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != "1" {
            return Err(format!(
                "unsupported schema_version {:?} (expected \"1\")",
                self.schema_version
            ));
        }
        self.world.validate()?;
        self.params.validate()?;
        if self.grasp_set.len() != self.world.arm_count() {
            return Err(format!(
                "grasp set has {} entries for {} arms",
                self.grasp_set.len(),
                self.world.arm_count()
            ));
        }
        if self.start.arm_configs.len() != self.world.arm_count() {
            return Err("start configuration arm count mismatch".into());
        }
        for (i, (arm, q)) in self
            .world
            .arms
            .iter()
            .zip(&self.start.arm_configs)
            .enumerate()
        {
            if q.len() != arm.dof() {
                return Err(format!("start joint vector of arm {i} has wrong length"));
            }
            if !arm.within_limits(q, 1e-9) {
                return Err(format!("start configuration violates arm {i} joint limits"));
            }
        }
        let residuals = grasp_residual(&self.start, &self.grasp_set, &self.world, self.params.w_rot);
        if let Some((i, r)) = residuals
            .iter()
            .enumerate()
            .find(|(_, r)| **r > CHAIN_CLOSED_TOL)
        {
            return Err(format!(
                "start configuration does not close the chain: arm {i} residual {r:.3e}"
            ));
        }
        let ctx = CollisionContext::transport(self.world.arm_count());
        if !collision_free(&self.start, &self.world, &ctx) {
            return Err("start configuration collides".into());
        }
        if !self.goal_pose.is_planar() {
            return Err("goal pose must be planar in this testbed".into());
        }
        Ok(())
    }
}
