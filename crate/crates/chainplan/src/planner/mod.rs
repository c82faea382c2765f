//! Stage-1 bidirectional search over object poses with closed-chain
//! following, regrasp budgeting, and failure-driven tree reorganization.
//!
//! The planner samples object poses, extends a tree by following the
//! interpolated object path with differential IK, and records a regrasp
//! request whenever an arm is driven against a joint limit with another IK
//! class available. Once the trees connect, stage 2 plans the actual
//! regrasp moves; if that fails, the failed vertex's edge is abandoned, the
//! severed subtree re-roots into the opposite tree, and the search resumes
//! with the failed pose blacklisted.

pub mod path;
pub mod tree;

use crate::arm::{DiffIkParams, IkStepError};
use crate::equilibrium::PlacementParams;
use crate::ikswitch::plan_ik_switch;
use crate::plan::{CompositePlan, PlanPhase};
use crate::pose::{
    discretize_path, interpolate_pose_path, sample_object_pose, Pose, PoseBounds, PosePath,
};
use crate::world::{
    collision_free, compute_composite_config, is_chain_closed, project, CollisionContext,
    CompositeConfig, FollowError, GraspSet, WorldDescription,
};
use path::global_path;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tree::{reorganize, Connection, RootKind, Tree};

/// How the goal composite configuration is picked among the IK classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalHeuristic {
    Random,
    NearestToStart,
    MostFlexible,
}

/// All tunables of one planning query.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    /// Iteration budget for tree extension.
    pub n_max: u32,
    /// Maximum number of regrasp events in the final path.
    pub r_max: u32,
    /// Discretization step of object paths under the weighted metric.
    pub step: f64,
    /// Rotation weight of the pose metric, meters per radian.
    pub w_rot: f64,
    /// Joint-limit proximity threshold for regrasp triggering. Must exceed
    /// one discretization step's worst-case joint motion, which the step
    /// cap bounds by `ik.dq_max`.
    pub eps_boundary: f64,
    pub seed: u64,
    /// Translation box object-pose samples are drawn from.
    pub bounds: PoseBounds,
    /// Maximum metric length of one tree extension.
    pub d_ext: f64,
    pub blacklist_radius: f64,
    pub goal_heuristic: GoalHeuristic,
    pub ik: DiffIkParams,
    /// Placement attempts per flagged vertex in stage 2.
    pub switch_attempts: u32,
    /// Iteration budget of the free-arm joint-space planner.
    pub regrasp_rrt_iters: u32,
    /// Per-joint resolution of swing paths, radians.
    pub regrasp_resolution: f64,
    pub shortcut_attempts: u32,
    /// Pull-back distance along the end-effector axis before a swing.
    pub retreat_distance: f64,
    pub placement: PlacementParams,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            n_max: 2000,
            r_max: 1,
            step: 0.05,
            w_rot: 0.3,
            eps_boundary: 0.25,
            seed: 0,
            bounds: PoseBounds::Planar {
                min: [-1.0, -1.0],
                max: [2.0, 2.0],
            },
            d_ext: 0.4,
            blacklist_radius: 0.1,
            goal_heuristic: GoalHeuristic::NearestToStart,
            ik: DiffIkParams::default(),
            switch_attempts: 20,
            regrasp_rrt_iters: 3000,
            regrasp_resolution: 0.02,
            shortcut_attempts: 100,
            retreat_distance: 0.05,
            placement: PlacementParams::default(),
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_max == 0 {
            return Err("n_max must be positive".into());
        }
        for (name, v) in [
            ("step", self.step),
            ("w_rot", self.w_rot),
            ("eps_boundary", self.eps_boundary),
            ("d_ext", self.d_ext),
            ("blacklist_radius", self.blacklist_radius),
            ("regrasp_resolution", self.regrasp_resolution),
            ("retreat_distance", self.retreat_distance),
        ] {
            if !(v > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        self.bounds.validate()
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no goal IK solution: {0}")]
    NoGoalIk(String),
    #[error("planner failed after {iterations} iterations")]
    Failure { iterations: u32 },
    #[error("invalid start configuration: {0}")]
    InvalidStart(String),
}

/// Planning statistics, written alongside the plan.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PlanStats {
    pub iterations: u32,
    pub stage2_failures: u32,
    pub regrasp_count: u32,
    pub tree_vertices: usize,
    pub global_planning_s: f64,
    pub regrasp_planning_s: f64,
    pub total_s: f64,
}

/// Result of following one object path with the whole chain.
#[derive(Debug, Clone)]
pub enum PathStatus {
    Reached,
    NeedRegrasp {
        c_regrasp: CompositeConfig,
        arm: usize,
    },
    Trapped,
}

#[derive(Debug, Clone)]
pub struct ComputedPath {
    pub status: PathStatus,
    /// Followed waypoints from the start config up to the last success.
    pub waypoints: Vec<CompositeConfig>,
}

/// Follow a discretized object path with differential IK. On an IK failure
/// with the failing arm near a joint limit, propose the most flexible
/// alternative IK class at the last reached pose; otherwise the path is
/// trapped.
pub fn compute_path(
    c_start: &CompositeConfig,
    pose_path: &PosePath,
    grasps: &GraspSet,
    world: &WorldDescription,
    params: &PlannerParams,
    allow_support_contact: bool,
) -> ComputedPath {
    let ctx = CollisionContext {
        allow_support_contact,
        grasp_excluded: vec![true; world.arm_count()],
    };
    let poses = discretize_path(pose_path, params.step, params.w_rot);
    let mut waypoints = vec![c_start.clone()];
    let mut prev = c_start.clone();
    for t_obj in poses.iter().skip(1) {
        if t_obj.distance(&prev.object_pose, params.w_rot) <= 1e-12 {
            continue;
        }
        match compute_composite_config(&prev, t_obj, grasps, world, &params.ik, &ctx) {
            Ok(next) => {
                waypoints.push(next.clone());
                prev = next;
            }
            Err(FollowError::Ik { arm, kind: _ }) => {
                let near = world.arms[arm]
                    .is_near_boundary(&prev.arm_configs[arm], params.eps_boundary)
                    .1;
                if near {
                    if let Some(c_regrasp) = get_regrasp_config(&prev, arm, grasps, world, params)
                    {
                        return ComputedPath {
                            status: PathStatus::NeedRegrasp { c_regrasp, arm },
                            waypoints,
                        };
                    }
                }
                return ComputedPath {
                    status: PathStatus::Trapped,
                    waypoints,
                };
            }
            Err(FollowError::Collision) => {
                return ComputedPath {
                    status: PathStatus::Trapped,
                    waypoints,
                };
            }
        }
    }
    ComputedPath {
        status: PathStatus::Reached,
        waypoints,
    }
}

/// The most flexible IK solution of arm `index` in a class other than its
/// current one, substituted into `c`. None when no other class reaches the
/// same grasp pose within limits, or the substituted configuration
/// collides.
pub fn get_regrasp_config(
    c: &CompositeConfig,
    index: usize,
    grasps: &GraspSet,
    world: &WorldDescription,
    params: &PlannerParams,
) -> Option<CompositeConfig> {
    let arm = &world.arms[index];
    let target = grasps.ee_target(project(c), index);
    let current_class = arm.elbow_class(&c.arm_configs[index]);
    let best = arm
        .enumerate_ik(&target)
        .into_iter()
        .filter(|s| arm.elbow_class(s) != current_class)
        .max_by(|a, b| {
            arm.flexibility_score(a)
                .partial_cmp(&arm.flexibility_score(b))
                .unwrap()
        })?;
    let c_regrasp = c.with_arm(index, best);
    let ctx = CollisionContext {
        allow_support_contact: false,
        grasp_excluded: vec![true; world.arm_count()],
    };
    if !collision_free(&c_regrasp, world, &ctx) {
        return None;
    }
    let _ = params;
    Some(c_regrasp)
}

/// Pick a chain-closed, collision-free composite configuration whose object
/// pose is `t_goal`. Candidates are the cartesian product of each arm's IK
/// solutions, in deterministic order.
pub fn select_goal_composite(
    t_goal: &Pose,
    grasps: &GraspSet,
    world: &WorldDescription,
    heuristic: GoalHeuristic,
    c_start: &CompositeConfig,
    rng: &mut impl Rng,
) -> Result<CompositeConfig, String> {
    let mut per_arm = Vec::with_capacity(world.arm_count());
    for (i, arm) in world.arms.iter().enumerate() {
        let sols = arm.enumerate_ik(&grasps.ee_target(t_goal, i));
        if sols.is_empty() {
            return Err(format!("arm {i} cannot reach its grasp pose at the goal"));
        }
        per_arm.push(sols);
    }
    let mut candidates = vec![Vec::new()];
    for sols in &per_arm {
        let mut next = Vec::new();
        for partial in &candidates {
            for s in sols {
                let mut ext = partial.clone();
                ext.push(s.clone());
                next.push(ext);
            }
        }
        candidates = next;
    }
    let ctx = CollisionContext {
        allow_support_contact: false,
        grasp_excluded: vec![true; world.arm_count()],
    };
    let valid: Vec<CompositeConfig> = candidates
        .into_iter()
        .map(|qs| CompositeConfig::new(qs, t_goal.clone()))
        .filter(|c| collision_free(c, world, &ctx))
        .collect();
    if valid.is_empty() {
        return Err("every goal composite configuration collides".into());
    }
    let chosen = match heuristic {
        GoalHeuristic::Random => valid[rng.random_range(0..valid.len())].clone(),
        GoalHeuristic::NearestToStart => valid
            .into_iter()
            .min_by(|a, b| {
                let da = joint_space_sq(a, c_start);
                let db = joint_space_sq(b, c_start);
                da.partial_cmp(&db).unwrap()
            })
            .unwrap(),
        GoalHeuristic::MostFlexible => valid
            .into_iter()
            .max_by(|a, b| {
                let fa = total_flexibility(a, world);
                let fb = total_flexibility(b, world);
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap(),
    };
    Ok(chosen)
}

fn joint_space_sq(a: &CompositeConfig, b: &CompositeConfig) -> f64 {
    a.arm_configs
        .iter()
        .zip(&b.arm_configs)
        .flat_map(|(x, y)| x.0.iter().zip(&y.0))
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

fn total_flexibility(c: &CompositeConfig, world: &WorldDescription) -> f64 {
    world
        .arms
        .iter()
        .zip(&c.arm_configs)
        .map(|(arm, q)| arm.flexibility_score(q))
        .sum()
}

/// Closest eligible vertex to `pose`: within the regrasp budget, and not a
/// pending regrasp host inside a blacklisted region. Ties break toward the
/// lowest vertex id.
pub fn nearest_neighbor(tree: &Tree, pose: &Pose, budget: u32, w_rot: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for v in tree.iter() {
        if v.regrasp_count > budget {
            continue;
        }
        if v.need_regrasp && !v.has_regrasp && tree.blacklisted(&v.config.object_pose, w_rot) {
            continue;
        }
        let d = v.config.object_pose.distance(pose, w_rot);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((v.id, d));
        }
    }
    best.map(|(id, _)| id)
}

/// Joint-config agreement tolerance for "same composite configuration".
const SAME_CONFIG_TOL: f64 = 1e-6;

fn extend(
    t_f: &mut Tree,
    next_id: &mut usize,
    t_rand: &Pose,
    grasps: &GraspSet,
    world: &WorldDescription,
    params: &PlannerParams,
) -> Option<usize> {
    let near_id = nearest_neighbor(t_f, t_rand, params.r_max, params.w_rot)?;
    let near = t_f.vertex(near_id);
    let near_pose = near.config.object_pose.clone();
    let d = near_pose.distance(t_rand, params.w_rot);
    if d <= 1e-12 {
        // zero-length extensions would duplicate the vertex
        return None;
    }
    let full = interpolate_pose_path(&near_pose, t_rand);
    let t_goal = if d <= params.d_ext {
        t_rand.clone()
    } else {
        full.eval(params.d_ext / d)
    };
    let pose_path = interpolate_pose_path(&near_pose, &t_goal);
    let near_config = near.config.clone();
    let near_count = near.regrasp_count;
    let computed = compute_path(&near_config, &pose_path, grasps, world, params, false);
    match computed.status {
        PathStatus::Reached => {
            let config = computed.waypoints.last().unwrap().clone();
            let id = *next_id;
            *next_id += 1;
            Some(t_f.add_vertex(id, near_id, config, computed.waypoints, false))
        }
        PathStatus::NeedRegrasp { c_regrasp, arm: _ } if near_count < params.r_max => {
            if t_f.blacklisted(&c_regrasp.object_pose, params.w_rot) {
                return None;
            }
            let id = *next_id;
            *next_id += 1;
            Some(t_f.add_vertex(id, near_id, c_regrasp, computed.waypoints, true))
        }
        _ => None,
    }
}

fn connect(
    t_f: &Tree,
    new_id: usize,
    t_b: &Tree,
    grasps: &GraspSet,
    world: &WorldDescription,
    params: &PlannerParams,
) -> Option<Connection> {
    let v_new = t_f.vertex(new_id);
    let target_pose = v_new.config.object_pose.clone();
    let budget = params.r_max.saturating_sub(v_new.regrasp_count);
    let near_id = nearest_neighbor(t_b, &target_pose, budget, params.w_rot)?;
    let near = t_b.vertex(near_id);
    let pose_path = interpolate_pose_path(&near.config.object_pose, &target_pose);
    let computed = compute_path(&near.config, &pose_path, grasps, world, params, false);
    if !matches!(computed.status, PathStatus::Reached) {
        log::debug!(
            "connect: follow from {near_id} toward vertex {new_id} -> {:?} after {} waypoints",
            computed.status,
            computed.waypoints.len()
        );
        return None;
    }
    let c_end = computed.waypoints.last().unwrap();
    let same = c_end
        .arm_configs
        .iter()
        .zip(&v_new.config.arm_configs)
        .all(|(a, b)| a.approx_eq(b, SAME_CONFIG_TOL));
    if same {
        return Some(Connection {
            new_id,
            near_id,
            waypoints: computed.waypoints,
            need_regrasp: false,
        });
    }
    log::debug!(
        "connect: reached vertex {new_id} with a class discrepancy (counts {} + {})",
        v_new.regrasp_count,
        near.regrasp_count
    );
    // arm configs disagree at the junction: one more switch, if allowed
    if v_new.regrasp_count + near.regrasp_count < params.r_max
        && !t_f.blacklisted(&target_pose, params.w_rot)
        && !t_b.blacklisted(&target_pose, params.w_rot)
    {
        return Some(Connection {
            new_id,
            near_id,
            waypoints: computed.waypoints,
            need_regrasp: true,
        });
    }
    None
}

/// Plan a composite path from `c_start` to any chain-closed configuration
/// whose object pose is `t_goal`, bridging disconnected configuration-space
/// components with at most `r_max` regrasp moves.
pub fn plan(
    c_start: &CompositeConfig,
    t_goal: &Pose,
    grasps: &GraspSet,
    world: &WorldDescription,
    params: &PlannerParams,
) -> Result<(CompositePlan, PlanStats), PlanError> {
    let (result, stats) = plan_with_stats(c_start, t_goal, grasps, world, params);
    result.map(|plan| (plan, stats))
}

/// Like [`plan`], but also reports statistics for failed queries.
pub fn plan_with_stats(
    c_start: &CompositeConfig,
    t_goal: &Pose,
    grasps: &GraspSet,
    world: &WorldDescription,
    params: &PlannerParams,
) -> (Result<CompositePlan, PlanError>, PlanStats) {
    let mut stats = PlanStats::default();
    let result = plan_inner(c_start, t_goal, grasps, world, params, &mut stats);
    (result, stats)
}

fn plan_inner(
    c_start: &CompositeConfig,
    t_goal: &Pose,
    grasps: &GraspSet,
    world: &WorldDescription,
    params: &PlannerParams,
    stats: &mut PlanStats,
) -> Result<CompositePlan, PlanError> {
    let t0 = std::time::Instant::now();
    params.validate().map_err(PlanError::InvalidStart)?;
    let finish = |stats: &mut PlanStats, regrasp_time: f64| {
        stats.total_s = t0.elapsed().as_secs_f64();
        stats.regrasp_planning_s = regrasp_time;
        stats.global_planning_s = stats.total_s - regrasp_time;
    };
    if !is_chain_closed(c_start, grasps, world, params.w_rot) {
        return Err(PlanError::InvalidStart(
            "start configuration does not close the chain".into(),
        ));
    }
    let ctx = CollisionContext::transport(world.arm_count());
    if !collision_free(c_start, world, &ctx) {
        return Err(PlanError::InvalidStart("start configuration collides".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    if project(c_start).distance(t_goal, params.w_rot) <= 1e-12 {
        let plan = CompositePlan::new(vec![PlanPhase::ClosedChain {
            waypoints: vec![c_start.clone()],
        }]);
        finish(stats, 0.0);
        return Ok(plan);
    }

    let c_goal = select_goal_composite(
        t_goal,
        grasps,
        world,
        params.goal_heuristic,
        c_start,
        &mut rng,
    )
    .map_err(PlanError::NoGoalIk)?;

    let mut t_f = Tree::new(RootKind::Start, 0, c_start.clone());
    let mut t_b = Tree::new(RootKind::Goal, 1, c_goal);
    let mut next_id = 2usize;
    let mut regrasp_time = 0.0f64;

    for iteration in 1..=params.n_max {
        stats.iterations = iteration;
        let t_rand = sample_object_pose(&params.bounds, &mut rng);
        if let Some(new_id) = extend(&mut t_f, &mut next_id, &t_rand, grasps, world, params) {
            if let Some(conn) = connect(&t_f, new_id, &t_b, grasps, world, params) {
                let s2 = std::time::Instant::now();
                let outcome =
                    plan_ik_switch(&mut t_f, &mut t_b, &conn, world, grasps, params, &mut rng);
                regrasp_time += s2.elapsed().as_secs_f64();
                match outcome {
                    Ok(()) => {
                        let gp = global_path(&t_f, &t_b, &conn);
                        let plan = path::generate_plan(&gp, &t_f, &t_b);
                        stats.regrasp_count = plan.switch_count() as u32;
                        stats.tree_vertices = t_f.len() + t_b.len();
                        finish(stats, regrasp_time);
                        return Ok(plan);
                    }
                    Err((in_forward, fail_id)) => {
                        stats.stage2_failures += 1;
                        reorganize(
                            &mut t_f,
                            &mut t_b,
                            &conn,
                            in_forward,
                            fail_id,
                            params.blacklist_radius,
                            params.w_rot,
                        );
                    }
                }
            }
        }
        std::mem::swap(&mut t_f, &mut t_b);
    }

    stats.tree_vertices = t_f.len() + t_b.len();
    finish(stats, regrasp_time);
    Err(PlanError::Failure {
        iterations: params.n_max,
    })
}

/// Expose the follow failure kinds for diagnostics.
pub fn follow_failure_is_limit(err: &FollowError) -> bool {
    matches!(
        err,
        FollowError::Ik {
            kind: IkStepError::Limit,
            ..
        }
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm::{ArmModel, JointConfig};
    use crate::testutil::{closed_config, dual_arm_world};
    use std::f64::consts::PI;

    #[test]
    fn nearest_neighbor_budget_and_ties() {
        let cfg = |x: f64| {
            CompositeConfig::new(vec![JointConfig(vec![0.0])], Pose::planar(x, 0.0, 0.0))
        };
        let mut t = Tree::new(RootKind::Start, 0, cfg(0.0));
        assert_eq!(nearest_neighbor(&t, &Pose::planar(3.0, 0.0, 0.0), 0, 0.3), Some(0));

        t.add_vertex(1, 0, cfg(1.0), vec![cfg(0.0), cfg(1.0)], false);
        t.add_vertex(2, 0, cfg(2.0), vec![cfg(0.0), cfg(2.0)], true);
        // vertex 2 is closer to x=2.2 but exceeds a zero budget
        assert_eq!(nearest_neighbor(&t, &Pose::planar(2.2, 0.0, 0.0), 1, 0.3), Some(2));
        assert_eq!(nearest_neighbor(&t, &Pose::planar(2.2, 0.0, 0.0), 0, 0.3), Some(1));
        // pending vertices inside a blacklist ball are ineligible
        t.blacklist.push(tree::BlacklistBall {
            center: Pose::planar(2.0, 0.0, 0.0),
            radius: 0.1,
        });
        assert_eq!(nearest_neighbor(&t, &Pose::planar(2.2, 0.0, 0.0), 1, 0.3), Some(1));
    }

    #[test]
    fn goal_selection_heuristics() {
        let (world, grasps) = dual_arm_world();
        let t_goal = Pose::planar(0.55, 0.9, 0.0);
        let c_start = closed_config(&world, &grasps, &Pose::planar(0.5, 0.85, 0.0), &[-1, 1])
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);

        let nearest = select_goal_composite(
            &t_goal,
            &grasps,
            &world,
            GoalHeuristic::NearestToStart,
            &c_start,
            &mut rng,
        )
        .unwrap();
        // nearest goal keeps the start's IK classes
        assert_eq!(world.arms[0].elbow_class(&nearest.arm_configs[0]),
                   world.arms[0].elbow_class(&c_start.arm_configs[0]));
        assert_eq!(world.arms[1].elbow_class(&nearest.arm_configs[1]),
                   world.arms[1].elbow_class(&c_start.arm_configs[1]));

        let flexible = select_goal_composite(
            &t_goal,
            &grasps,
            &world,
            GoalHeuristic::MostFlexible,
            &c_start,
            &mut rng,
        )
        .unwrap();
        // exhaustive check: no candidate scores higher
        let mut best = f64::NEG_INFINITY;
        for ca in world.arms[0].enumerate_ik(&grasps.ee_target(&t_goal, 0)) {
            for cb in world.arms[1].enumerate_ik(&grasps.ee_target(&t_goal, 1)) {
                let c = CompositeConfig::new(vec![ca.clone(), cb], t_goal.clone());
                if collision_free(&c, &world, &CollisionContext::transport(2)) {
                    best = best.max(total_flexibility(&c, &world));
                }
            }
        }
        assert!((total_flexibility(&flexible, &world) - best).abs() < 1e-12);

        let unreachable = select_goal_composite(
            &Pose::planar(5.0, 5.0, 0.0),
            &grasps,
            &world,
            GoalHeuristic::Random,
            &c_start,
            &mut rng,
        );
        assert!(unreachable.is_err());
    }

    #[test]
    fn compute_path_zero_length_and_trapped() {
        let (world, grasps) = dual_arm_world();
        let params = PlannerParams::default();
        let t = Pose::planar(0.55, 0.9, 0.0);
        let c = closed_config(&world, &grasps, &t, &[-1, 1]).unwrap();

        let zero = compute_path(
            &c,
            &interpolate_pose_path(&t, &t),
            &grasps,
            &world,
            &params,
            false,
        );
        assert!(matches!(zero.status, PathStatus::Reached));
        assert_eq!(zero.waypoints.len(), 1);

        // drag the object out of both arms' reach
        let out = compute_path(
            &c,
            &interpolate_pose_path(&t, &Pose::planar(0.55, 3.0, 0.0)),
            &grasps,
            &world,
            &params,
            false,
        );
        assert!(matches!(out.status, PathStatus::Trapped));
    }

    #[test]
    fn boundary_failure_proposes_other_class() {
        let (mut world, grasps) = dual_arm_world();
        // cap arm 1's elbow-up fold so dragging the object toward its base
        // jams the joint while the elbow-down class stays available
        let b = world.arms[1].clone();
        world.arms[1] = ArmModel::new(
            b.base().clone(),
            b.link_lengths().to_vec(),
            vec![-2.9, -2.9, -PI],
            vec![2.9, 2.2, PI],
        )
        .unwrap();
        let t = Pose::planar(0.55, 0.9, 0.0);
        let c = closed_config(&world, &grasps, &t, &[-1, 1]).unwrap();
        let params = PlannerParams::default();

        // translating toward the restricted arm folds its elbow to the cap
        let spin = compute_path(
            &c,
            &interpolate_pose_path(&t, &Pose::planar(0.62, 0.75, 0.0)),
            &grasps,
            &world,
            &params,
            false,
        );
        match spin.status {
            PathStatus::NeedRegrasp { c_regrasp, arm } => {
                assert_eq!(arm, 1);
                let pre = spin.waypoints.last().unwrap();
                assert_eq!(c_regrasp.object_pose, pre.object_pose);
                assert!(c_regrasp.arm_configs[0].approx_eq(&pre.arm_configs[0], 1e-12));
                assert_ne!(
                    world.arms[1].elbow_class(&c_regrasp.arm_configs[1]),
                    world.arms[1].elbow_class(&pre.arm_configs[1])
                );
            }
            other => panic!("expected a regrasp request, got {other:?}"),
        }
    }

    #[test]
    fn trivial_query_returns_single_waypoint_plan() {
        let (world, grasps) = dual_arm_world();
        let t = Pose::planar(0.55, 0.9, 0.0);
        let c = closed_config(&world, &grasps, &t, &[-1, 1]).unwrap();
        let (plan, stats) = plan(&c, &t, &grasps, &world, &PlannerParams::default()).unwrap();
        assert_eq!(plan.switch_count(), 0);
        assert_eq!(plan.step_count(), 1);
        assert_eq!(plan.start_config(), Some(&c));
        assert_eq!(stats.regrasp_count, 0);
    }

    #[test]
    fn free_space_transport_plans_without_switches() {
        let (world, grasps) = dual_arm_world();
        let t = Pose::planar(0.45, 0.85, 0.0);
        let c = closed_config(&world, &grasps, &t, &[-1, 1]).unwrap();
        let mut params = PlannerParams {
            n_max: 400,
            r_max: 1,
            bounds: PoseBounds::Planar {
                min: [0.3, 0.7],
                max: [0.8, 1.05],
            },
            ..PlannerParams::default()
        };
        params.seed = 5;
        let goal = Pose::planar(0.65, 0.95, 0.2);
        let (plan, _) = plan(&c, &goal, &grasps, &world, &params).expect("free-space query");
        assert_eq!(plan.switch_count(), 0);
        let end = plan.end_config().unwrap();
        assert!(end.object_pose.approx_eq(&goal, 1e-6));
        assert_eq!(plan.start_config(), Some(&c));
    }
}
