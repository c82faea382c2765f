//! Stage-2 planning of regrasp actions at flagged vertices: closed-chain
//! approach and retreat legs to a placement pose, plus a free-arm
//! joint-space swing between the two IK solutions of the unchanged grasp
//! pose, validated for single-grasp static equilibrium throughout.

use crate::arm::JointConfig;
use crate::equilibrium::{
    equilibrium_feasible, grasp_contacts, gravito_inertial_wrench, sample_placement_config_from,
    Placement, GRAVITY,
};
use crate::plan::{ArmSwitch, IkSwitchAction, SwitchPhase};
use crate::planner::path::global_path;
use crate::planner::tree::{Connection, Tree};
use crate::planner::{compute_path, PathStatus, PlannerParams};
use crate::pose::{interpolate_pose_path, Pose};
use crate::world::{
    collision_free, CollisionContext, CompositeConfig, GraspSet, WorldDescription,
};
use rand::Rng;

/// Which leg of a placement round trip failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Path2Error {
    GoFailed,
    BackFailed,
}

/// Compute the closed-chain path from `c` down to the placement pose and
/// the path from the placement back up to `c_child`'s object pose, each in
/// its own side's IK classes. `c` and `c_child` share the regrasp vertex's
/// object pose.
pub fn compute_path2(
    c: &CompositeConfig,
    t_place: &Pose,
    c_child: &CompositeConfig,
    grasps: &GraspSet,
    world: &WorldDescription,
    params: &PlannerParams,
) -> Result<(Vec<CompositeConfig>, Vec<CompositeConfig>), Path2Error> {
    let go_path = interpolate_pose_path(&c.object_pose, t_place);
    let go = compute_path(c, &go_path, grasps, world, params, true);
    if !matches!(go.status, PathStatus::Reached) {
        return Err(Path2Error::GoFailed);
    }
    let back_path = interpolate_pose_path(&c_child.object_pose, t_place);
    let back_rev = compute_path(c_child, &back_path, grasps, world, params, true);
    if !matches!(back_rev.status, PathStatus::Reached) {
        return Err(Path2Error::BackFailed);
    }
    let mut back = back_rev.waypoints;
    back.reverse();
    Ok((go.waypoints, back))
}

/// A world with the object parked and all arms but one holding still.
struct ParkedScene<'a> {
    world: &'a WorldDescription,
    parked_pose: &'a Pose,
    arms_now: &'a [JointConfig],
    arm: usize,
}

impl ParkedScene<'_> {
    fn valid(&self, q: &JointConfig) -> bool {
        if !self.world.arms[self.arm].within_limits(q, 1e-9) {
            return false;
        }
        let mut arm_configs = self.arms_now.to_vec();
        arm_configs[self.arm] = q.clone();
        let c = CompositeConfig::new(arm_configs, self.parked_pose.clone());
        collision_free(&c, self.world, &CollisionContext::regrasp(self.world.arm_count()))
    }

    fn edge_valid(&self, a: &JointConfig, b: &JointConfig, resolution: f64) -> bool {
        let n = (a.max_abs_diff(b) / resolution).ceil() as usize;
        for i in 1..n {
            let s = i as f64 / n as f64;
            let q = JointConfig(
                a.0.iter()
                    .zip(&b.0)
                    .map(|(x, y)| x + s * (y - x))
                    .collect(),
            );
            if !self.valid(&q) {
                return false;
            }
        }
        true
    }
}

fn lerp_config(a: &JointConfig, b: &JointConfig, s: f64) -> JointConfig {
    JointConfig(
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x + s * (y - x))
            .collect(),
    )
}

fn densify(path: &[JointConfig], resolution: f64) -> Vec<JointConfig> {
    let mut out = Vec::new();
    for pair in path.windows(2) {
        let n = (pair[0].max_abs_diff(&pair[1]) / resolution).ceil().max(1.0) as usize;
        for i in 0..n {
            out.push(lerp_config(&pair[0], &pair[1], i as f64 / n as f64));
        }
    }
    out.push(path.last().unwrap().clone());
    out
}

fn joint_distance(a: &JointConfig, b: &JointConfig) -> f64 {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Plan a collision-free joint path for one arm between two IK solutions of
/// the same grasp pose, with the object parked and the other arms holding.
/// A bidirectional RRT with greedy connection, shortcut smoothing and a
/// fixed per-joint resolution; deterministic given the generator.
pub fn plan_regrasp_path(
    q_from: &JointConfig,
    q_to: &JointConfig,
    arm: usize,
    world: &WorldDescription,
    parked_pose: &Pose,
    arms_now: &[JointConfig],
    rng: &mut impl Rng,
    params: &PlannerParams,
) -> Option<Vec<JointConfig>> {
    let scene = ParkedScene {
        world,
        parked_pose,
        arms_now,
        arm,
    };
    if !scene.valid(q_from) || !scene.valid(q_to) {
        return None;
    }
    if q_from.max_abs_diff(q_to) <= 1e-9 {
        return Some(vec![q_from.clone()]);
    }
    let res = params.regrasp_resolution;
    if scene.edge_valid(q_from, q_to, res) {
        return Some(densify(&[q_from.clone(), q_to.clone()], res));
    }

    const EXTEND_STEP: f64 = 0.3;
    let model = &world.arms[arm];
    let sample = |rng: &mut dyn rand::RngCore| -> JointConfig {
        JointConfig(
            model
                .q_lower()
                .iter()
                .zip(model.q_upper())
                .map(|(&lo, &hi)| rng.random_range(lo..hi))
                .collect(),
        )
    };

    // node: (config, parent index)
    let mut tree_a: Vec<(JointConfig, Option<usize>)> = vec![(q_from.clone(), None)];
    let mut tree_b: Vec<(JointConfig, Option<usize>)> = vec![(q_to.clone(), None)];
    let mut a_is_from = true;

    let nearest = |tree: &[(JointConfig, Option<usize>)], q: &JointConfig| -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, (node, _)) in tree.iter().enumerate() {
            let d = joint_distance(node, q);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    };
    let step_toward = |from: &JointConfig, to: &JointConfig| -> JointConfig {
        let d = from.max_abs_diff(to);
        if d <= EXTEND_STEP {
            to.clone()
        } else {
            lerp_config(from, to, EXTEND_STEP / d)
        }
    };

    for _ in 0..params.regrasp_rrt_iters {
        let q_rand = sample(rng);
        let ia = nearest(&tree_a, &q_rand);
        let q_new = step_toward(&tree_a[ia].0, &q_rand);
        if scene.valid(&q_new) && scene.edge_valid(&tree_a[ia].0, &q_new, res) {
            tree_a.push((q_new.clone(), Some(ia)));
            // greedy connect from the other tree
            let mut ib = nearest(&tree_b, &q_new);
            loop {
                let q_step = step_toward(&tree_b[ib].0, &q_new);
                if !(scene.valid(&q_step) && scene.edge_valid(&tree_b[ib].0, &q_step, res)) {
                    break;
                }
                tree_b.push((q_step.clone(), Some(ib)));
                ib = tree_b.len() - 1;
                if q_step.max_abs_diff(&q_new) <= 1e-9 {
                    // join: walk both branches out to their roots
                    let mut half_a: Vec<JointConfig> = Vec::new();
                    let mut cur = Some(tree_a.len() - 1);
                    while let Some(i) = cur {
                        half_a.push(tree_a[i].0.clone());
                        cur = tree_a[i].1;
                    }
                    half_a.reverse();
                    let mut half_b: Vec<JointConfig> = Vec::new();
                    let mut cur = Some(ib);
                    while let Some(i) = cur {
                        half_b.push(tree_b[i].0.clone());
                        cur = tree_b[i].1;
                    }
                    let mut path = half_a;
                    path.extend(half_b.into_iter().skip(1));
                    if !a_is_from {
                        path.reverse();
                    }
                    shortcut(&mut path, &scene, res, rng, params.shortcut_attempts);
                    return Some(densify(&path, res));
                }
            }
        }
        std::mem::swap(&mut tree_a, &mut tree_b);
        a_is_from = !a_is_from;
    }
    None
}

fn shortcut(
    path: &mut Vec<JointConfig>,
    scene: &ParkedScene<'_>,
    resolution: f64,
    rng: &mut impl Rng,
    attempts: u32,
) {
    for _ in 0..attempts {
        if path.len() < 3 {
            return;
        }
        let i = rng.random_range(0..path.len() - 2);
        let j = rng.random_range(i + 2..path.len());
        if scene.edge_valid(&path[i], &path[j], resolution) {
            path.drain(i + 1..j);
        }
    }
}

/// Straight end-effector pull-back along the grasp approach axis, realized
/// as differential IK steps from the grasp-pose solution outward. Returns
/// the joint path starting at `q_grasp`.
fn retreat_path(
    arm: usize,
    q_grasp: &JointConfig,
    t_place: &Pose,
    grasps: &GraspSet,
    world: &WorldDescription,
    arms_now: &[JointConfig],
    params: &PlannerParams,
) -> Option<Vec<JointConfig>> {
    let t_grasp = grasps.ee_target(t_place, arm);
    let t_back = t_grasp.compose(&Pose::planar(-params.retreat_distance, 0.0, 0.0));
    let ee_path = interpolate_pose_path(&t_grasp, &t_back);
    let scene = ParkedScene {
        world,
        parked_pose: t_place,
        arms_now,
        arm,
    };
    let step = (params.retreat_distance / 5.0).min(0.01);
    let poses = crate::pose::discretize_path(&ee_path, step, params.w_rot);
    let mut out = vec![q_grasp.clone()];
    let mut q = q_grasp.clone();
    for target in poses.iter().skip(1) {
        q = world.arms[arm].differential_ik_step(&q, target, &params.ik).ok()?;
        if !scene.valid(&q) {
            return None;
        }
        out.push(q.clone());
    }
    Some(out)
}

/// Plan one arm's open-retreat-swing-approach-close sequence at the parked
/// placement, requiring equilibrium with that arm's grasp excluded.
#[allow(clippy::too_many_arguments)]
fn plan_arm_switch(
    arm: usize,
    arms_now: &[JointConfig],
    q_to: &JointConfig,
    placement: &Placement,
    grasps: &GraspSet,
    world: &WorldDescription,
    params: &PlannerParams,
    rng: &mut impl Rng,
) -> Option<ArmSwitch> {
    let t_place = &placement.pose;
    // the object must be held by the environment and remaining grasps alone
    let mut contacts = placement.contacts.clone();
    contacts.extend(grasp_contacts(t_place, grasps, &[arm]));
    let wrench = gravito_inertial_wrench(world.object.mass, world.com_world(t_place), GRAVITY);
    equilibrium_feasible(&wrench, &contacts, world.friction_mu, world.grip_force_max)?;

    let q_from = &arms_now[arm];
    let out_leg = retreat_path(arm, q_from, t_place, grasps, world, arms_now, params)?;
    let mut arms_after = arms_now.to_vec();
    arms_after[arm] = q_to.clone();
    let in_leg = retreat_path(arm, q_to, t_place, grasps, world, &arms_after, params)?;

    let swing = plan_regrasp_path(
        out_leg.last().unwrap(),
        in_leg.last().unwrap(),
        arm,
        world,
        t_place,
        arms_now,
        rng,
        params,
    )?;

    let mut approach: Vec<JointConfig> = in_leg;
    approach.reverse();
    Some(ArmSwitch {
        arm,
        phases: vec![
            SwitchPhase::Open {
                config: q_from.clone(),
            },
            SwitchPhase::Retreat { path: out_leg },
            SwitchPhase::Swing { path: swing },
            SwitchPhase::Approach { path: approach },
            SwitchPhase::Close {
                config: q_to.clone(),
            },
        ],
    })
}

/// Plan regrasp actions for every vertex along the global path whose
/// arrival and departure configurations disagree. Returns the first vertex
/// whose action could not be planned, identified by tree membership and id.
pub fn plan_ik_switch(
    t_f: &mut Tree,
    t_b: &mut Tree,
    conn: &Connection,
    world: &WorldDescription,
    grasps: &GraspSet,
    params: &PlannerParams,
    rng: &mut impl Rng,
) -> Result<(), (bool, usize)> {
    const TOL: f64 = 1e-6;
    let gp = global_path(t_f, t_b, conn);
    for node in &gp.nodes {
        let diff = node.switching_arms(TOL);
        if diff.is_empty() {
            continue;
        }
        let fail = (node.in_forward, node.id);

        // vertices with a matching stored action are never replanned
        {
            let tree: &Tree = if node.in_forward { t_f } else { t_b };
            let v = tree.vertex(node.id);
            if v.has_regrasp {
                if let Some(a) = &v.regrasp_action {
                    let matches = |a: &IkSwitchAction| {
                        a.entry_config().map_or(false, |c| c.approx_eq(&node.pre, TOL))
                            && a.exit_config().map_or(false, |c| c.approx_eq(&node.post, TOL))
                    };
                    if matches(a) || matches(&a.reversed()) {
                        continue;
                    }
                }
            }
        }

        // a blacklisted pose never hosts another request
        if t_f.blacklisted(&node.pre.object_pose, params.w_rot)
            || t_b.blacklisted(&node.pre.object_pose, params.w_rot)
        {
            return Err(fail);
        }

        let mut planned: Option<IkSwitchAction> = None;
        for attempt in 0..params.switch_attempts {
            let placement = match sample_placement_config_from(
                &node.pre.object_pose,
                world,
                grasps,
                &diff,
                rng,
                &params.placement,
                attempt > 0,
            ) {
                Some(p) => p,
                None => {
                    log::debug!("switch at vertex {}: no placement (attempt {attempt})", node.id);
                    return Err(fail);
                }
            };
            let path2 = compute_path2(&node.pre, &placement.pose, &node.post, grasps, world, params);
            let Ok((go, back)) = path2 else {
                log::debug!(
                    "switch at vertex {}: {:?} to placement {:?} (attempt {attempt})",
                    node.id,
                    path2.unwrap_err(),
                    placement.pose
                );
                continue;
            };

            let mut current = go.last().unwrap().arm_configs.clone();
            let target = back.first().unwrap().arm_configs.clone();
            let mut switches = Vec::new();
            let mut ok = true;
            for &arm in &diff {
                match plan_arm_switch(
                    arm,
                    &current,
                    &target[arm],
                    &placement,
                    grasps,
                    world,
                    params,
                    rng,
                ) {
                    Some(sw) => {
                        current[arm] = target[arm].clone();
                        switches.push(sw);
                    }
                    None => {
                        log::debug!(
                            "switch at vertex {}: arm {arm} swing failed (attempt {attempt})",
                            node.id
                        );
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            planned = Some(IkSwitchAction {
                vertex_id: node.id,
                place_pose: placement.pose.clone(),
                go,
                switches,
                back,
            });
            break;
        }

        match planned {
            Some(action) => {
                let tree: &mut Tree = if node.in_forward { t_f } else { t_b };
                let v = tree.vertex_mut(node.id);
                v.need_regrasp = true;
                v.has_regrasp = true;
                v.regrasp_action = Some(action);
                tree.recount_regrasps();
                log::debug!(
                    "planned regrasp action at vertex {} ({} arm(s))",
                    node.id,
                    diff.len()
                );
            }
            None => return Err(fail),
        }
    }
    Ok(())
}
