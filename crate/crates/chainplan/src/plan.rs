//! The planner's output: an alternating sequence of closed-chain motion
//! segments and regrasp actions, serializable for replay and execution.

use crate::arm::JointConfig;
use crate::pose::Pose;
use crate::world::CompositeConfig;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: &str = "1";

fn default_schema() -> String {
    SCHEMA_VERSION.to_string()
}

/// A full manipulation plan from the start composite configuration to a
/// composite configuration whose object pose is the goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositePlan {
    #[serde(default = "default_schema")]
    pub schema_version: String,
    pub phases: Vec<PlanPhase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlanPhase {
    /// All arms grasping; every waypoint is chain-closed.
    ClosedChain { waypoints: Vec<CompositeConfig> },
    /// Park the object on the environment, let one or more arms jump to a
    /// different IK solution of the same grasp pose, and lift off again.
    IkSwitch(IkSwitchAction),
}

/// One regrasp action hosted at a tree vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IkSwitchAction {
    /// Vertex that requested the switch (diagnostic).
    pub vertex_id: usize,
    /// Object pose where the switch happens (constant during the swings).
    pub place_pose: Pose,
    /// Closed-chain approach from the vertex pose down to the placement.
    pub go: Vec<CompositeConfig>,
    /// Per-arm swings, executed in order while the object stays parked.
    pub switches: Vec<ArmSwitch>,
    /// Closed-chain retreat from the placement back to the vertex pose.
    pub back: Vec<CompositeConfig>,
}

/// One arm releasing, swinging to another IK solution of the same grasp
/// pose, and regrasping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSwitch {
    pub arm: usize,
    pub phases: Vec<SwitchPhase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
pub enum SwitchPhase {
    /// Gripper opens at the pre-switch IK solution.
    Open { config: JointConfig },
    /// Straight pull-back along the end-effector approach axis.
    Retreat { path: Vec<JointConfig> },
    /// Free-space joint path between the two retreated configurations.
    Swing { path: Vec<JointConfig> },
    /// Mirror of the retreat toward the post-switch IK solution.
    Approach { path: Vec<JointConfig> },
    /// Gripper closes at the post-switch IK solution.
    Close { config: JointConfig },
}

impl ArmSwitch {
    /// The released arm's joint path from the pre-switch to the post-switch
    /// IK solution, concatenated across phases.
    pub fn joint_path(&self) -> Vec<JointConfig> {
        let mut out: Vec<JointConfig> = Vec::new();
        let mut push = |q: &JointConfig| {
            if out.last().map_or(true, |l: &JointConfig| l != q) {
                out.push(q.clone());
            }
        };
        for phase in &self.phases {
            match phase {
                SwitchPhase::Open { config } | SwitchPhase::Close { config } => push(config),
                SwitchPhase::Retreat { path }
                | SwitchPhase::Swing { path }
                | SwitchPhase::Approach { path } => path.iter().for_each(&mut push),
            }
        }
        out
    }

    pub fn pre_config(&self) -> Option<&JointConfig> {
        self.phases.iter().find_map(|p| match p {
            SwitchPhase::Open { config } => Some(config),
            _ => None,
        })
    }

    pub fn post_config(&self) -> Option<&JointConfig> {
        self.phases.iter().rev().find_map(|p| match p {
            SwitchPhase::Close { config } => Some(config),
            _ => None,
        })
    }

    fn reversed(&self) -> ArmSwitch {
        let mut phases: Vec<SwitchPhase> = self
            .phases
            .iter()
            .rev()
            .map(|p| match p {
                SwitchPhase::Open { config } => SwitchPhase::Close {
                    config: config.clone(),
                },
                SwitchPhase::Close { config } => SwitchPhase::Open {
                    config: config.clone(),
                },
                SwitchPhase::Retreat { path } => SwitchPhase::Approach {
                    path: path.iter().rev().cloned().collect(),
                },
                SwitchPhase::Approach { path } => SwitchPhase::Retreat {
                    path: path.iter().rev().cloned().collect(),
                },
                SwitchPhase::Swing { path } => SwitchPhase::Swing {
                    path: path.iter().rev().cloned().collect(),
                },
            })
            .collect();
        // keep the canonical open -> ... -> close order readable
        phases.sort_by_key(|p| match p {
            SwitchPhase::Open { .. } => 0,
            SwitchPhase::Retreat { .. } => 1,
            SwitchPhase::Swing { .. } => 2,
            SwitchPhase::Approach { .. } => 3,
            SwitchPhase::Close { .. } => 4,
        });
        ArmSwitch {
            arm: self.arm,
            phases,
        }
    }
}

impl IkSwitchAction {
    pub fn entry_config(&self) -> Option<&CompositeConfig> {
        self.go.first()
    }

    pub fn exit_config(&self) -> Option<&CompositeConfig> {
        self.back.last()
    }

    /// The same physical action traversed in the opposite direction.
    pub fn reversed(&self) -> IkSwitchAction {
        IkSwitchAction {
            vertex_id: self.vertex_id,
            place_pose: self.place_pose.clone(),
            go: self.back.iter().rev().cloned().collect(),
            switches: self.switches.iter().rev().map(ArmSwitch::reversed).collect(),
            back: self.go.iter().rev().cloned().collect(),
        }
    }
}

/// Phase label of one flattened step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepPhase {
    Transport,
    Go,
    Open,
    Retreat,
    Swing,
    Approach,
    Close,
    Back,
}

impl std::fmt::Display for StepPhase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StepPhase::Transport => "transport",
            StepPhase::Go => "go",
            StepPhase::Open => "open",
            StepPhase::Retreat => "retreat",
            StepPhase::Swing => "swing",
            StepPhase::Approach => "approach",
            StepPhase::Close => "close",
            StepPhase::Back => "back",
        };
        f.write_str(s)
    }
}

/// One instant of the expanded plan: every arm's joints, the object pose,
/// and which arm (if any) currently has its grasp open.
#[derive(Debug, Clone)]
pub struct FlatStep {
    /// Index into `CompositePlan::phases`.
    pub phase_index: usize,
    pub phase: StepPhase,
    pub arm_configs: Vec<JointConfig>,
    pub object_pose: Pose,
    pub released_arm: Option<usize>,
}

impl CompositePlan {
    pub fn new(phases: Vec<PlanPhase>) -> Self {
        CompositePlan {
            schema_version: SCHEMA_VERSION.to_string(),
            phases,
        }
    }

    pub fn start_config(&self) -> Option<&CompositeConfig> {
        match self.phases.first()? {
            PlanPhase::ClosedChain { waypoints } => waypoints.first(),
            PlanPhase::IkSwitch(a) => a.entry_config(),
        }
    }

    pub fn end_config(&self) -> Option<&CompositeConfig> {
        match self.phases.last()? {
            PlanPhase::ClosedChain { waypoints } => waypoints.last(),
            PlanPhase::IkSwitch(a) => a.exit_config(),
        }
    }

    pub fn switch_count(&self) -> usize {
        self.phases
            .iter()
            .filter(|p| matches!(p, PlanPhase::IkSwitch(_)))
            .count()
    }

    /// Expand the plan into a flat sequence of full system states, applying
    /// arm swings to the placement configuration cumulatively. Replay,
    /// execution and rendering all walk this sequence.
    pub fn flatten_steps(&self) -> Vec<FlatStep> {
        let mut out = Vec::new();
        for (phase_index, phase) in self.phases.iter().enumerate() {
            match phase {
                PlanPhase::ClosedChain { waypoints } => {
                    for wp in waypoints {
                        out.push(FlatStep {
                            phase_index,
                            phase: StepPhase::Transport,
                            arm_configs: wp.arm_configs.clone(),
                            object_pose: wp.object_pose.clone(),
                            released_arm: None,
                        });
                    }
                }
                PlanPhase::IkSwitch(action) => {
                    for wp in &action.go {
                        out.push(FlatStep {
                            phase_index,
                            phase: StepPhase::Go,
                            arm_configs: wp.arm_configs.clone(),
                            object_pose: wp.object_pose.clone(),
                            released_arm: None,
                        });
                    }
                    let mut current = action
                        .go
                        .last()
                        .map(|c| c.arm_configs.clone())
                        .unwrap_or_default();
                    for sw in &action.switches {
                        for ph in &sw.phases {
                            let (label, configs, released): (StepPhase, Vec<JointConfig>, _) =
                                match ph {
                                    SwitchPhase::Open { config } => (
                                        StepPhase::Open,
                                        vec![config.clone()],
                                        Some(sw.arm),
                                    ),
                                    SwitchPhase::Retreat { path } => {
                                        (StepPhase::Retreat, path.clone(), Some(sw.arm))
                                    }
                                    SwitchPhase::Swing { path } => {
                                        (StepPhase::Swing, path.clone(), Some(sw.arm))
                                    }
                                    SwitchPhase::Approach { path } => {
                                        (StepPhase::Approach, path.clone(), Some(sw.arm))
                                    }
                                    SwitchPhase::Close { config } => {
                                        (StepPhase::Close, vec![config.clone()], None)
                                    }
                                };
                            for q in configs {
                                current[sw.arm] = q;
                                out.push(FlatStep {
                                    phase_index,
                                    phase: label,
                                    arm_configs: current.clone(),
                                    object_pose: action.place_pose.clone(),
                                    released_arm: released,
                                });
                            }
                        }
                    }
                    for wp in &action.back {
                        out.push(FlatStep {
                            phase_index,
                            phase: StepPhase::Back,
                            arm_configs: wp.arm_configs.clone(),
                            object_pose: wp.object_pose.clone(),
                            released_arm: None,
                        });
                    }
                }
            }
        }
        out
    }

    /// Total number of waypoints across all phases, counting each arm swing
    /// step once.
    pub fn step_count(&self) -> usize {
        self.phases
            .iter()
            .map(|p| match p {
                PlanPhase::ClosedChain { waypoints } => waypoints.len(),
                PlanPhase::IkSwitch(a) => {
                    a.go.len()
                        + a.back.len()
                        + a.switches
                            .iter()
                            .map(|s| s.joint_path().len())
                            .sum::<usize>()
                }
            })
            .sum()
    }
}
