//! Simulated leader-follower execution of a plan under injected model
//! error, with position-based force compliance on the follower.
//!
//! The leader (arm 0) tracks the planned joints exactly. The follower (arm
//! 1) adds a compliance margin driven by the simulated grasp force: a
//! diagonal stiffness maps the follower's end-effector displacement from
//! its planned pose to a measured force, the force error feeds a PD law in
//! task space, and the resulting joint correction accumulates step by step.
//! Phases with an open grasp run open-loop: the margin is frozen.
//!
//! Tuning guide: with diagonal stiffness `K`, the proportional loop is
//! stable for `0 < k_p K < 2` (`k_p K = 1` settles in one step) and the
//! derivative term requires `k_v K / dt < 0.5`. The defaults sit at
//! `k_p K = 1` and `k_v K / dt = 0.125`.

use crate::arm::{ArmModel, JointConfig};
use crate::plan::{CompositePlan, StepPhase};
use crate::pose::{normalize_angle, Pose};
use crate::world::{GraspSet, WorldDescription};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Diagonal PD gains of the position-based force controller.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlGains {
    /// Proportional gain on the force error, per axis.
    pub k_p: [f64; 3],
    /// Derivative gain on the force-error rate, per axis.
    pub k_v: [f64; 3],
    /// Control period in seconds.
    pub dt: f64,
}

impl Default for ControlGains {
    fn default() -> Self {
        ControlGains {
            k_p: [1e-3; 3],
            k_v: [1e-6; 3],
            dt: 0.008,
        }
    }
}

impl ControlGains {
    pub fn off() -> Self {
        ControlGains {
            k_p: [0.0; 3],
            k_v: [0.0; 3],
            dt: 0.008,
        }
    }
}

/// Execution-simulation options.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ExecOptions {
    pub gains: ControlGains,
    /// Diagonal stiffness mapping grasp-frame displacement to force
    /// (N/m, N/m, N·m/rad).
    pub stiffness: [f64; 3],
    /// Injected model error: the follower's true base is offset by this
    /// much relative to the model.
    pub follower_base_offset: [f64; 2],
    /// Simulated force magnitude that aborts the execution.
    pub f_break: f64,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            gains: ControlGains::default(),
            stiffness: [1000.0; 3],
            follower_base_offset: [0.0, 0.0],
            f_break: 200.0,
        }
    }
}

/// One control cycle of the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: usize,
    pub phase: StepPhase,
    /// Planned follower joints.
    pub q_t: JointConfig,
    /// Accumulated compliance margin.
    pub q_c: JointConfig,
    /// Commanded joints, exactly `q_t + q_c`.
    pub q: JointConfig,
    /// Simulated measured force at the follower's grasp.
    pub f_r: [f64; 3],
    /// Force error fed to the controller.
    pub f_e: [f64; 3],
    /// Follower grasp-pose error magnitude under the true kinematics.
    pub residual: f64,
    /// Compliance update used a damped pseudo-inverse because the Jacobian
    /// was singular.
    pub singular: bool,
    /// Compliance active this cycle.
    pub compliant: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub records: Vec<TraceRecord>,
    pub diverged: bool,
}

impl ExecutionTrace {
    pub fn max_abs_force_error(&self) -> f64 {
        self.records
            .iter()
            .flat_map(|r| r.f_e.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    /// Largest force-error magnitude over the last quarter of the trace.
    pub fn steady_state_force_error(&self) -> f64 {
        let n = self.records.len();
        self.records[n - n / 4..]
            .iter()
            .flat_map(|r| r.f_e.iter().map(|v| v.abs()))
            .fold(0.0, f64::max)
    }

    /// Serialize as JSON lines, one record per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).unwrap());
            out.push('\n');
        }
        if self.diverged {
            out.push_str("{\"diverged\":true}\n");
        }
        out
    }
}

/// One accumulation step of the compliance margin:
/// `q_c_next = q_c + J^{-1} (k_p f_e + k_v (f_e - f_e_prev) / dt)`.
/// Returns the new margin and whether the damped fallback replaced a
/// singular Jacobian inverse.
pub fn compliance_step(
    f_e: &[f64; 3],
    f_e_prev: &[f64; 3],
    gains: &ControlGains,
    jacobian: &Matrix3<f64>,
    q_c_prev: &JointConfig,
) -> (JointConfig, bool) {
    let x_f = Vector3::new(
        gains.k_p[0] * f_e[0] + gains.k_v[0] * (f_e[0] - f_e_prev[0]) / gains.dt,
        gains.k_p[1] * f_e[1] + gains.k_v[1] * (f_e[1] - f_e_prev[1]) / gains.dt,
        gains.k_p[2] * f_e[2] + gains.k_v[2] * (f_e[2] - f_e_prev[2]) / gains.dt,
    );
    let (q_f, singular) = match jacobian.lu().solve(&x_f) {
        Some(sol) => (sol, false),
        None => {
            // damped pseudo-inverse fallback near singularities
            let jt = jacobian.transpose();
            let damped = jacobian * jt + Matrix3::identity() * 1e-6;
            let sol = damped
                .lu()
                .solve(&x_f)
                .map(|y| jt * y)
                .unwrap_or_else(Vector3::zeros);
            (sol, true)
        }
    };
    let next = JointConfig(
        q_c_prev
            .0
            .iter()
            .zip(q_f.iter())
            .map(|(c, d)| c + d)
            .collect(),
    );
    (next, singular)
}

fn pose_error(actual: &Pose, desired: &Pose) -> [f64; 3] {
    let (ax, ay, at) = actual.planar_parts();
    let (dx, dy, dt) = desired.planar_parts();
    [ax - dx, ay - dy, normalize_angle(at - dt)]
}

/// Run the plan through the leader-follower compliance loop. The follower's
/// planned end-effector pose is the force reference, so a zero base offset
/// yields an exactly quiet trace.
pub fn simulate_execution(
    plan: &CompositePlan,
    opts: &ExecOptions,
    world: &WorldDescription,
    _grasps: &GraspSet,
) -> ExecutionTrace {
    assert!(
        world.arm_count() >= 2,
        "leader-follower execution needs two arms"
    );
    const FOLLOWER: usize = 1;
    let model = &world.arms[FOLLOWER];
    let (bx, by, bt) = model.base().planar_parts();
    let true_model = ArmModel::new(
        Pose::planar(
            bx + opts.follower_base_offset[0],
            by + opts.follower_base_offset[1],
            bt,
        ),
        model.link_lengths().to_vec(),
        model.q_lower().to_vec(),
        model.q_upper().to_vec(),
    )
    .expect("offset base keeps the model valid");

    let steps = plan.flatten_steps();
    let mut records = Vec::with_capacity(steps.len());
    let mut diverged = false;
    let mut q_c = JointConfig(vec![0.0; model.dof()]);
    let mut f_e_prev = [0.0; 3];

    for (k, step) in steps.iter().enumerate() {
        let q_t = step.arm_configs[FOLLOWER].clone();
        let compliant = step.released_arm.is_none()
            && matches!(
                step.phase,
                StepPhase::Transport | StepPhase::Go | StepPhase::Back
            );

        let (f_r, f_e, singular) = if compliant {
            // measure with the previous margin applied to this step's plan
            let q_meas = JointConfig(
                q_t.0.iter().zip(&q_c.0).map(|(t, c)| t + c).collect(),
            );
            let actual = true_model.forward_kinematics(&q_meas);
            let desired = model.forward_kinematics(&q_t);
            let err = pose_error(&actual, &desired);
            let f_r = [
                opts.stiffness[0] * err[0],
                opts.stiffness[1] * err[1],
                opts.stiffness[2] * err[2],
            ];
            // ideal contact force is zero: pure stress rejection
            let f_e = [-f_r[0], -f_r[1], -f_r[2]];

            let mut singular = false;
            if k > 0 {
                let j_dyn = model.jacobian(&q_meas);
                let mut j = Matrix3::zeros();
                for r in 0..3 {
                    for c in 0..3 {
                        j[(r, c)] = j_dyn[(r, c)];
                    }
                }
                let (next, sing) = compliance_step(&f_e, &f_e_prev, &opts.gains, &j, &q_c);
                q_c = next;
                singular = sing;
            }
            f_e_prev = f_e;
            (f_r, f_e, singular)
        } else {
            // open grasp or swing: position control only, margin frozen
            f_e_prev = [0.0; 3];
            ([0.0; 3], [0.0; 3], false)
        };

        let q = JointConfig(q_t.0.iter().zip(&q_c.0).map(|(t, c)| t + c).collect());
        let residual = if compliant {
            let actual = true_model.forward_kinematics(&q);
            let desired = model.forward_kinematics(&q_t);
            let e = pose_error(&actual, &desired);
            (e[0] * e[0] + e[1] * e[1]).sqrt() + 0.3 * e[2].abs()
        } else {
            0.0
        };

        let force_mag = (f_r[0] * f_r[0] + f_r[1] * f_r[1]).sqrt();
        records.push(TraceRecord {
            step: k,
            phase: step.phase,
            q_t,
            q_c: q_c.clone(),
            q,
            f_r,
            f_e,
            residual,
            singular,
            compliant,
        });
        if force_mag > opts.f_break {
            diverged = true;
            break;
        }
    }

    ExecutionTrace { records, diverged }
}
