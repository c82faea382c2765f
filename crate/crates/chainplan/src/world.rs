//! The composite configuration space: grasp constraint residuals, the
//! object-pose projection, collision checking against a polygonal
//! environment, and chain-following composite configuration computation.

use crate::arm::{ArmModel, DiffIkParams, IkStepError, JointConfig};
use crate::geom::{
    segment_polygon_distance, segment_polygon_penetration, segment_segment_distance,
    ConvexPolygon, Point2, Segment,
};
use crate::pose::Pose;
use serde::{Deserialize, Serialize};

/// Fixed object-to-end-effector transforms, one per arm. Held constant for
/// an entire planning query: a regrasp changes the IK solution, never the
/// grasp pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GraspSet(pub Vec<Pose>);

impl GraspSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// World end-effector pose of arm `i` when the object sits at `t_obj`.
    pub fn ee_target(&self, t_obj: &Pose, i: usize) -> Pose {
        t_obj.compose(&self.0[i])
    }
}

/// The full system state: one joint vector per arm plus the object pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeConfig {
    pub arm_configs: Vec<JointConfig>,
    pub object_pose: Pose,
}

impl CompositeConfig {
    pub fn new(arm_configs: Vec<JointConfig>, object_pose: Pose) -> Self {
        CompositeConfig {
            arm_configs,
            object_pose,
        }
    }

    /// Replace one arm's joints, leaving everything else untouched.
    pub fn with_arm(&self, index: usize, q: JointConfig) -> CompositeConfig {
        let mut out = self.clone();
        out.arm_configs[index] = q;
        out
    }

    pub fn approx_eq(&self, other: &CompositeConfig, tol: f64) -> bool {
        self.object_pose.approx_eq(&other.object_pose, tol)
            && self.arm_configs.len() == other.arm_configs.len()
            && self
                .arm_configs
                .iter()
                .zip(&other.arm_configs)
                .all(|(a, b)| a.approx_eq(b, tol))
    }
}

/// Projection onto the object pose: the part of a composite configuration
/// the trees are organized around.
pub fn project(c: &CompositeConfig) -> &Pose {
    &c.object_pose
}

/// The manipulated object: a convex polygon in its own frame plus mass
/// properties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub polygon: ConvexPolygon,
    pub mass: f64,
    pub com: Point2,
}

/// Support surfaces the object may rest on during regrasps, plus obstacle
/// segments. The left normal of a support's a->b direction points away from
/// the surface.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Environment {
    #[serde(default)]
    pub supports: Vec<Segment>,
    #[serde(default)]
    pub obstacles: Vec<Segment>,
}

fn default_inflation() -> f64 {
    0.01
}

/// Everything static in a planning query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldDescription {
    pub arms: Vec<ArmModel>,
    pub object: ObjectModel,
    pub environment: Environment,
    pub friction_mu: f64,
    pub grip_force_max: f64,
    /// Collision clearance added around zero-thickness link segments.
    #[serde(default = "default_inflation")]
    pub link_inflation: f64,
}

impl WorldDescription {
    pub fn validate(&self) -> Result<(), String> {
        if self.arms.is_empty() {
            return Err("world needs at least one arm".into());
        }
        if !(self.object.mass > 0.0) {
            return Err("object mass must be positive".into());
        }
        if self.friction_mu < 0.0 {
            return Err("friction coefficient must be nonnegative".into());
        }
        if self.grip_force_max < 0.0 {
            return Err("grip force bound must be nonnegative".into());
        }
        if self.link_inflation < 0.0 {
            return Err("link inflation must be nonnegative".into());
        }
        for s in self.environment.supports.iter().chain(&self.environment.obstacles) {
            if s.length() <= 0.0 {
                return Err("environment segments must have positive length".into());
            }
        }
        Ok(())
    }

    pub fn arm_count(&self) -> usize {
        self.arms.len()
    }

    /// Object polygon vertices in the world frame.
    pub fn object_vertices(&self, t_obj: &Pose) -> Vec<Point2> {
        self.object.polygon.transformed(t_obj)
    }

    /// World position of the object's center of mass.
    pub fn com_world(&self, t_obj: &Pose) -> Point2 {
        t_obj.transform_point(self.object.com)
    }
}

/// Which contacts a collision query tolerates.
#[derive(Debug, Clone)]
pub struct CollisionContext {
    /// Object may rest on support surfaces (regrasp phases).
    pub allow_support_contact: bool,
    /// Arms whose end-effector link is engaged at its grasp pose; their last
    /// link may touch the object boundary but must not cut into it.
    pub grasp_excluded: Vec<bool>,
}

impl CollisionContext {
    pub fn transport(arm_count: usize) -> Self {
        CollisionContext {
            allow_support_contact: false,
            grasp_excluded: vec![true; arm_count],
        }
    }

    pub fn regrasp(arm_count: usize) -> Self {
        CollisionContext {
            allow_support_contact: true,
            grasp_excluded: vec![true; arm_count],
        }
    }
}

/// Depth beyond which a tolerated contact counts as penetration.
const PENETRATION_TOL: f64 = 1e-6;

/// True when no arm link, object or environment pair collides under the
/// given contact tolerances.
pub fn collision_free(c: &CompositeConfig, world: &WorldDescription, ctx: &CollisionContext) -> bool {
    let r = world.link_inflation;
    let obj = world.object_vertices(&c.object_pose);
    let links: Vec<Vec<Segment>> = world
        .arms
        .iter()
        .zip(&c.arm_configs)
        .map(|(arm, q)| arm.link_segments(q))
        .collect();

    for (i, arm_links) in links.iter().enumerate() {
        let last = arm_links.len() - 1;
        for (li, seg) in arm_links.iter().enumerate() {
            for obs in world
                .environment
                .obstacles
                .iter()
                .chain(&world.environment.supports)
            {
                if segment_segment_distance(seg, obs) < r {
                    return false;
                }
            }
            let excluded_ee = li == last && *ctx.grasp_excluded.get(i).unwrap_or(&false);
            if excluded_ee {
                if segment_polygon_penetration(seg, &obj) > PENETRATION_TOL {
                    return false;
                }
            } else if segment_polygon_distance(seg, &obj) < r {
                return false;
            }
        }
        for other in links.iter().skip(i + 1) {
            for a in arm_links {
                for b in other {
                    if segment_segment_distance(a, b) < r {
                        return false;
                    }
                }
            }
        }
    }

    for obs in &world.environment.obstacles {
        if segment_polygon_distance(obs, &obj) < r {
            return false;
        }
    }
    for sup in &world.environment.supports {
        if ctx.allow_support_contact {
            if segment_polygon_penetration(sup, &obj) > PENETRATION_TOL {
                return false;
            }
        } else if segment_polygon_distance(sup, &obj) < r {
            return false;
        }
    }
    true
}

/// Per-arm chain-closure residual: the pose distance between each arm's
/// end-effector and its grasp target. A configuration is chain-closed when
/// every residual is at most 1e-8.
pub fn grasp_residual(
    c: &CompositeConfig,
    grasps: &GraspSet,
    world: &WorldDescription,
    w_rot: f64,
) -> Vec<f64> {
    assert_eq!(c.arm_configs.len(), grasps.len());
    assert_eq!(c.arm_configs.len(), world.arms.len());
    world
        .arms
        .iter()
        .zip(&c.arm_configs)
        .enumerate()
        .map(|(i, (arm, q))| {
            let ee = arm.forward_kinematics(q);
            ee.distance(&grasps.ee_target(&c.object_pose, i), w_rot)
        })
        .collect()
}

pub const CHAIN_CLOSED_TOL: f64 = 1e-8;

pub fn is_chain_closed(
    c: &CompositeConfig,
    grasps: &GraspSet,
    world: &WorldDescription,
    w_rot: f64,
) -> bool {
    grasp_residual(c, grasps, world, w_rot)
        .iter()
        .all(|&r| r <= CHAIN_CLOSED_TOL)
}

/// Why the chain could not follow one object-pose step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FollowError {
    /// Differential IK failed for this arm (lowest failing index).
    Ik { arm: usize, kind: IkStepError },
    /// All arms followed but the result collides.
    Collision,
}

impl std::fmt::Display for FollowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FollowError::Ik { arm, kind } => write!(f, "arm {arm} IK failure: {kind}"),
            FollowError::Collision => write!(f, "collision"),
        }
    }
}

/// Advance every arm to the next object pose with one differential IK step
/// each, keeping the chain closed. Reports the lowest-index failing arm so
/// the caller can run its boundary check, or a collision verdict on the
/// otherwise-valid configuration.
pub fn compute_composite_config(
    c_prev: &CompositeConfig,
    t_obj: &Pose,
    grasps: &GraspSet,
    world: &WorldDescription,
    ik: &DiffIkParams,
    ctx: &CollisionContext,
) -> Result<CompositeConfig, FollowError> {
    let mut arm_configs = Vec::with_capacity(world.arms.len());
    for (i, (arm, q_prev)) in world.arms.iter().zip(&c_prev.arm_configs).enumerate() {
        let target = grasps.ee_target(t_obj, i);
        let q = arm
            .differential_ik_step(q_prev, &target, ik)
            .map_err(|kind| FollowError::Ik { arm: i, kind })?;
        arm_configs.push(q);
    }
    let next = CompositeConfig::new(arm_configs, t_obj.clone());
    if !collision_free(&next, world, ctx) {
        return Err(FollowError::Collision);
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{dist, sub};
    use crate::pose::normalize_angle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn dual_arm_world() -> (WorldDescription, GraspSet) {
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
        let object = ObjectModel {
            polygon: ConvexPolygon::new(vec![
                [-0.2, -0.05],
                [0.2, -0.05],
                [0.2, 0.05],
                [-0.2, 0.05],
            ])
            .unwrap(),
            mass: 1.0,
            com: [0.0, 0.0],
        };
        let world = WorldDescription {
            arms: vec![arm_a, arm_b],
            object,
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

    /// Chain-closed config at the given object pose, choosing the requested
    /// elbow signs (+1 up, -1 down) per arm.
    fn closed_config(
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

    #[test]
    fn project_is_the_object_pose() {
        let (world, grasps) = dual_arm_world();
        let t = Pose::planar(0.55, 0.6, 0.1);
        let c = closed_config(&world, &grasps, &t, &[-1, 1]).unwrap();
        assert_eq!(project(&c), &t);
        // invariant under arm-config changes
        let mut c2 = c.clone();
        c2.arm_configs[0].0[0] += 0.3;
        assert_eq!(project(&c2), &t);
    }

    #[test]
    fn residual_by_construction_and_locality() {
        let (world, grasps) = dual_arm_world();
        let t = Pose::planar(0.55, 0.6, 0.0);
        let c = closed_config(&world, &grasps, &t, &[-1, 1]).unwrap();
        let res = grasp_residual(&c, &grasps, &world, 0.3);
        assert!(res.iter().all(|&r| r <= 1e-8), "residuals {res:?}");
        assert!(is_chain_closed(&c, &grasps, &world, 0.3));

        let mut perturbed = c.clone();
        perturbed.arm_configs[1].0[0] += 0.1;
        let res2 = grasp_residual(&perturbed, &grasps, &world, 0.3);
        assert!(res2[0] <= 1e-8);
        assert!(res2[1] > 1e-3);
    }

    #[test]
    fn residual_matches_independent_fk() {
        let (world, grasps) = dual_arm_world();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let c = CompositeConfig::new(
                vec![
                    JointConfig(vec![
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                    ]),
                    JointConfig(vec![
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                        rng.random_range(-2.0..2.0),
                    ]),
                ],
                Pose::planar(
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.2..0.8),
                    rng.random_range(-3.0..3.0),
                ),
            );
            let res = grasp_residual(&c, &grasps, &world, 0.3);
            for i in 0..2 {
                // independent: accumulate the chain by explicit trig
                let arm = &world.arms[i];
                let (bx, by, bt) = arm.base().planar_parts();
                let (mut x, mut y, mut t) = (bx, by, bt);
                for (&l, &qi) in arm.link_lengths().iter().zip(&c.arm_configs[i].0) {
                    t += qi;
                    x += l * t.cos();
                    y += l * t.sin();
                }
                let target = grasps.ee_target(&c.object_pose, i);
                let (gx, gy, gt) = target.planar_parts();
                let expect = ((x - gx).powi(2) + (y - gy).powi(2)).sqrt()
                    + 0.3 * normalize_angle(t - gt).abs();
                assert!((res[i] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn collision_trivials() {
        let (world, grasps) = dual_arm_world();
        let ctx = CollisionContext::transport(2);
        let t = Pose::planar(0.55, 0.9, 0.0);
        let c = closed_config(&world, &grasps, &t, &[-1, 1]).unwrap();
        assert!(collision_free(&c, &world, &ctx));

        // park both arms pointing up so only the object interacts below
        let parked = |t_obj: Pose| {
            CompositeConfig::new(
                vec![
                    JointConfig(vec![PI / 2.0, 0.1, 0.1]),
                    JointConfig(vec![PI / 2.0, -0.1, -0.1]),
                ],
                t_obj,
            )
        };
        let loose = CollisionContext {
            allow_support_contact: false,
            grasp_excluded: vec![false, false],
        };
        // drop the object into the support surface
        assert!(!collision_free(&parked(Pose::planar(0.55, 0.03, 0.0)), &world, &loose));
        // resting contact is tolerated in regrasp phases
        let rest = CollisionContext {
            allow_support_contact: true,
            grasp_excluded: vec![false, false],
        };
        assert!(collision_free(&parked(Pose::planar(0.55, 0.05, 0.0)), &world, &rest));
        // but penetration is not
        assert!(!collision_free(&parked(Pose::planar(0.55, 0.02, 0.0)), &world, &rest));
    }

    #[test]
    fn collision_matches_pairwise_oracle() {
        let (mut world, _) = dual_arm_world();
        world.environment.obstacles.push(Segment::new([0.5, 0.8], [0.7, 1.0]));
        let ctx = CollisionContext {
            allow_support_contact: false,
            grasp_excluded: vec![false, false],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut collisions = 0;
        for _ in 0..200 {
            let c = CompositeConfig::new(
                vec![
                    JointConfig(vec![
                        rng.random_range(-PI..PI),
                        rng.random_range(-PI..PI),
                        rng.random_range(-PI..PI),
                    ]),
                    JointConfig(vec![
                        rng.random_range(-PI..PI),
                        rng.random_range(-PI..PI),
                        rng.random_range(-PI..PI),
                    ]),
                ],
                Pose::planar(
                    rng.random_range(-0.2..1.3),
                    rng.random_range(0.0..1.2),
                    rng.random_range(-PI..PI),
                ),
            );
            let got = collision_free(&c, &world, &ctx);
            let want = oracle_collision_free(&c, &world);
            if got != want {
                // the sampled oracle is coarse near the inflation threshold
                let margin = oracle_min_distance(&c, &world) - world.link_inflation;
                assert!(
                    margin.abs() < 1e-3,
                    "verdict mismatch with margin {margin}"
                );
            }
            if !got {
                collisions += 1;
            }
        }
        assert!(collisions > 20, "sampling produced {collisions} collisions");
    }

    /// Brute-force oracle: min distance over densely sampled points of all
    /// segment pairs and the object polygon treated as its edge loop plus
    /// containment probes.
    fn oracle_min_distance(c: &CompositeConfig, world: &WorldDescription) -> f64 {
        let mut segs: Vec<Segment> = Vec::new();
        for (arm, q) in world.arms.iter().zip(&c.arm_configs) {
            segs.extend(arm.link_segments(q));
        }
        let env: Vec<Segment> = world
            .environment
            .obstacles
            .iter()
            .chain(&world.environment.supports)
            .copied()
            .collect();
        let obj = world.object_vertices(&c.object_pose);
        let nverts = obj.len();
        let obj_edges: Vec<Segment> = (0..nverts)
            .map(|i| Segment::new(obj[i], obj[(i + 1) % nverts]))
            .collect();

        let sample = |s: &Segment| -> Vec<[f64; 2]> {
            (0..=400)
                .map(|i| s.point_at(i as f64 / 400.0))
                .collect()
        };
        // independent point-to-segment distance via clamped projection
        let pt_seg = |p: [f64; 2], s: &Segment| -> f64 {
            let d = sub(s.b, s.a);
            let len2 = d[0] * d[0] + d[1] * d[1];
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((p[0] - s.a[0]) * d[0] + (p[1] - s.a[1]) * d[1]) / len2).clamp(0.0, 1.0)
            };
            dist(p, [s.a[0] + t * d[0], s.a[1] + t * d[1]])
        };
        let seg_pair = |a: &Segment, b: &Segment| -> f64 {
            let mut best = f64::INFINITY;
            for p in sample(a) {
                best = best.min(pt_seg(p, b));
            }
            for q in sample(b) {
                best = best.min(pt_seg(q, a));
            }
            best
        };
        let inside = |p: [f64; 2]| -> bool {
            // winding by sign of cross products (convex, ccw)
            (0..nverts).all(|i| {
                let e = sub(obj[(i + 1) % nverts], obj[i]);
                let v = sub(p, obj[i]);
                e[0] * v[1] - e[1] * v[0] >= 0.0
            })
        };

        let mut best = f64::INFINITY;
        // arm links vs environment
        for s in &segs {
            for e in &env {
                best = best.min(seg_pair(s, e));
            }
        }
        // arm links vs object (distance 0 when a sampled point is inside)
        for s in &segs {
            for e in &obj_edges {
                best = best.min(seg_pair(s, e));
            }
            if sample(s).into_iter().any(inside) {
                best = 0.0;
            }
        }
        // arm vs arm
        let n0 = world.arms[0].dof();
        for a in &segs[..n0] {
            for b in &segs[n0..] {
                best = best.min(seg_pair(a, b));
            }
        }
        // object vs environment
        for e in &env {
            for oe in &obj_edges {
                best = best.min(seg_pair(e, oe));
            }
            if sample(e).into_iter().any(inside) {
                best = 0.0;
            }
        }
        best
    }

    fn oracle_collision_free(c: &CompositeConfig, world: &WorldDescription) -> bool {
        oracle_min_distance(c, world) >= world.link_inflation
    }

    #[test]
    fn follow_fixed_point_and_step() {
        let (world, grasps) = dual_arm_world();
        let ik = DiffIkParams::default();
        let ctx = CollisionContext::transport(2);
        let t = Pose::planar(0.55, 0.9, 0.0);
        let c = closed_config(&world, &grasps, &t, &[-1, 1]).unwrap();

        let same = compute_composite_config(&c, &t, &grasps, &world, &ik, &ctx).unwrap();
        assert_eq!(same, c);

        let t2 = Pose::planar(0.57, 0.92, 0.02);
        let next = compute_composite_config(&c, &t2, &grasps, &world, &ik, &ctx).unwrap();
        assert_eq!(project(&next), &t2);
        assert!(is_chain_closed(&next, &grasps, &world, 0.3));
        // deterministic
        let again = compute_composite_config(&c, &t2, &grasps, &world, &ik, &ctx).unwrap();
        assert_eq!(next, again);
    }

    #[test]
    fn follow_reports_failing_arm_kind() {
        let (mut world, grasps) = dual_arm_world();
        // narrow arm 1's shoulder so a modest object motion drags it out
        let b = world.arms[1].clone();
        let q_here = {
            let t = Pose::planar(0.55, 0.9, 0.0);
            let sols = b.enumerate_ik(&grasps.ee_target(&t, 1));
            sols[0].clone()
        };
        world.arms[1] = ArmModel::new(
            b.base().clone(),
            b.link_lengths().to_vec(),
            vec![q_here.0[0] - 0.05, -PI, -PI],
            vec![q_here.0[0] + 0.05, PI, PI],
        )
        .unwrap();
        let t = Pose::planar(0.55, 0.9, 0.0);
        let c = closed_config(&world, &grasps, &t, &[-1, -1]).unwrap();

        let ik = DiffIkParams::default();
        let ctx = CollisionContext::transport(2);
        let mut cur = c;
        let mut saw_limit = false;
        for k in 1..=40 {
            let t_next = Pose::planar(0.55 - 0.01 * k as f64, 0.9, 0.0);
            match compute_composite_config(&cur, &t_next, &grasps, &world, &ik, &ctx) {
                Ok(next) => cur = next,
                Err(FollowError::Ik { arm, kind }) => {
                    assert_eq!(arm, 1);
                    assert_eq!(kind, IkStepError::Limit);
                    saw_limit = true;
                    break;
                }
                Err(other) => panic!("unexpected failure {other}"),
            }
        }
        assert!(saw_limit, "narrowed shoulder never hit its limit");
    }
}
