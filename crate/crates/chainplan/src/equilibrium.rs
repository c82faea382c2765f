//! Static equilibrium of a grasped, environment-supported object, and
//! placement-pose sampling for regrasp moves.
//!
//! Equilibrium is posed as a feasibility problem over contact forces: the
//! grasp-matrix equality balancing the gravito-inertial wrench, friction
//! cones at environment contacts, and per-axis grip-force bounds at grasp
//! contacts. The planar reduction uses 2D forces and a scalar moment.

use crate::geom::{add, cross, dot, normalize, perp, scale, segment_polygon_distance, sub, Point2, Segment};
use crate::lp::{solve_feasibility, FeasibilityProblem};
use crate::pose::{normalize_angle, Pose};
use crate::world::{GraspSet, WorldDescription};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Standard gravity, world frame.
pub const GRAVITY: Point2 = [0.0, -9.81];

/// One contact through which force can be applied to the object.
#[derive(Debug, Clone, PartialEq)]
pub enum Contact {
    /// Unilateral environment contact with an outward unit normal.
    Environment { point: Point2, normal: Point2 },
    /// Bilateral grasp contact of one arm, bounded by grip strength.
    Grasp { point: Point2, arm: usize },
}

impl Contact {
    pub fn point(&self) -> Point2 {
        match self {
            Contact::Environment { point, .. } | Contact::Grasp { point, .. } => *point,
        }
    }
}

/// Gravity force and moment the contact forces must balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrenchGi {
    pub force: Point2,
    pub moment: f64,
}

/// Planar gravito-inertial wrench: `(-m g, -m (p_com x g))`.
pub fn gravito_inertial_wrench(mass: f64, p_com: Point2, g: Point2) -> WrenchGi {
    assert!(mass > 0.0, "mass must be positive");
    WrenchGi {
        force: scale(g, -mass),
        moment: -mass * cross(p_com, g),
    }
}

/// Decide whether contact forces exist that hold the object in static
/// equilibrium; returns witness forces (one 2D force per contact) when they
/// do. Environment contacts stay inside the exact two-edge friction cone;
/// grasp forces are bounded per axis by `f_grip_max`.
pub fn equilibrium_feasible(
    wrench: &WrenchGi,
    contacts: &[Contact],
    mu: f64,
    f_grip_max: f64,
) -> Option<Vec<Point2>> {
    if contacts.is_empty() {
        return None;
    }
    let k = contacts.len();
    let n = 2 * k;
    let mut p = FeasibilityProblem::new(n);

    let mut row_fx = vec![0.0; n];
    let mut row_fy = vec![0.0; n];
    let mut row_m = vec![0.0; n];
    for (i, c) in contacts.iter().enumerate() {
        let pt = c.point();
        row_fx[2 * i] = 1.0;
        row_fy[2 * i + 1] = 1.0;
        row_m[2 * i] = -pt[1];
        row_m[2 * i + 1] = pt[0];
    }
    p.add_eq(row_fx, wrench.force[0]);
    p.add_eq(row_fy, wrench.force[1]);
    p.add_eq(row_m, wrench.moment);

    for (i, c) in contacts.iter().enumerate() {
        match c {
            Contact::Environment { normal, .. } => {
                let nrm = normalize(*normal);
                let tan = perp(nrm);
                let mut row = vec![0.0; n];
                row[2 * i] = -nrm[0];
                row[2 * i + 1] = -nrm[1];
                p.add_ub(row, 0.0);
                for sign in [1.0, -1.0] {
                    let mut row = vec![0.0; n];
                    row[2 * i] = sign * tan[0] - mu * nrm[0];
                    row[2 * i + 1] = sign * tan[1] - mu * nrm[1];
                    p.add_ub(row, 0.0);
                }
            }
            Contact::Grasp { .. } => {
                for axis in 0..2 {
                    for sign in [1.0, -1.0] {
                        let mut row = vec![0.0; n];
                        row[2 * i + axis] = sign;
                        p.add_ub(row, f_grip_max);
                    }
                }
            }
        }
    }

    let x = solve_feasibility(&p)?;
    Some((0..k).map(|i| [x[2 * i], x[2 * i + 1]]).collect())
}

/// Placement-sampling knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlacementParams {
    /// Gaussian pose perturbation between iterations.
    pub sigma_translation: f64,
    pub sigma_rotation: f64,
    /// Gaussian jitter along the surface after dropping.
    pub sigma_tangential: f64,
    /// Largest rotation applied to lay an edge flat; steeper features keep
    /// their vertex contact.
    pub max_align_rotation: f64,
    pub max_iters: u32,
}

impl Default for PlacementParams {
    fn default() -> Self {
        PlacementParams {
            sigma_translation: 0.02,
            sigma_rotation: 0.05,
            sigma_tangential: 0.02,
            max_align_rotation: 0.3,
            max_iters: 30,
        }
    }
}

/// A placement pose together with its environment contact points.
#[derive(Debug, Clone)]
pub struct Placement {
    pub pose: Pose,
    pub contacts: Vec<Contact>,
}

/// Grasp contact points (end-effector positions) of the arms still holding
/// the object at `t_obj`.
pub fn grasp_contacts(
    t_obj: &Pose,
    grasps: &GraspSet,
    released: &[usize],
) -> Vec<Contact> {
    (0..grasps.len())
        .filter(|i| !released.contains(i))
        .map(|i| {
            let ee = grasps.ee_target(t_obj, i);
            let (x, y, _) = ee.planar_parts();
            Contact::Grasp { point: [x, y], arm: i }
        })
        .collect()
}

/// Environment contacts of the object at `pose` against one support: the
/// vertices of the contact area, or a single touching vertex. Empty when
/// nothing touches within `tol`.
pub fn support_contacts(
    world: &WorldDescription,
    pose: &Pose,
    support: &Segment,
    tol: f64,
) -> Vec<Contact> {
    let n = support.left_normal();
    let t = support.direction();
    let len = support.length();
    let verts = world.object_vertices(pose);
    let mut touching: Vec<f64> = Vec::new();
    for v in &verts {
        let h = dot(sub(*v, support.a), n);
        let u = dot(sub(*v, support.a), t);
        if h.abs() <= tol && u >= -tol && u <= len + tol {
            touching.push(u.clamp(0.0, len));
        }
    }
    if touching.is_empty() {
        return Vec::new();
    }
    touching.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = touching[0];
    let hi = *touching.last().unwrap();
    let mut out = vec![Contact::Environment {
        point: add(support.a, scale(t, lo)),
        normal: n,
    }];
    if hi - lo > tol {
        out.push(Contact::Environment {
            point: add(support.a, scale(t, hi)),
            normal: n,
        });
    }
    out
}

/// Tolerance within which a placed vertex counts as touching the surface.
pub const CONTACT_TOL: f64 = 1e-7;

/// Find a feasible placement pose near `t_obj`: drop the object onto the
/// closest support (aligning the nearest edge when the needed rotation is
/// small), keep it if all arms can still reach their grasp poses, nothing
/// collides, and equilibrium holds with the `released` arms' grasps
/// excluded. The first iteration leaves `t_obj` unperturbed, so an
/// already-valid placement is returned unchanged; callers retrying after a
/// downstream failure pass `skip_unperturbed` to force fresh candidates.
pub fn sample_placement_config(
    t_obj: &Pose,
    world: &WorldDescription,
    grasps: &GraspSet,
    released: &[usize],
    rng: &mut impl Rng,
    params: &PlacementParams,
) -> Option<Placement> {
    sample_placement_config_from(t_obj, world, grasps, released, rng, params, false)
}

#[allow(clippy::too_many_arguments)]
pub fn sample_placement_config_from(
    t_obj: &Pose,
    world: &WorldDescription,
    grasps: &GraspSet,
    released: &[usize],
    rng: &mut impl Rng,
    params: &PlacementParams,
    skip_unperturbed: bool,
) -> Option<Placement> {
    let normal_t = Normal::new(0.0, params.sigma_translation).ok()?;
    let normal_r = Normal::new(0.0, params.sigma_rotation).ok()?;
    let normal_tan = Normal::new(0.0, params.sigma_tangential).ok()?;

    for iter in 0..params.max_iters {
        let (base_pose, jitter) = if iter == 0 && !skip_unperturbed {
            (t_obj.clone(), 0.0)
        } else {
            let (x, y, theta) = t_obj.planar_parts();
            (
                Pose::planar(
                    x + normal_t.sample(rng),
                    y + normal_t.sample(rng),
                    theta + normal_r.sample(rng),
                ),
                normal_tan.sample(rng),
            )
        };

        // supports ordered by how far the object must drop
        let mut order: Vec<(f64, usize)> = world
            .environment
            .supports
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let n = s.left_normal();
                let h = world
                    .object_vertices(&base_pose)
                    .iter()
                    .map(|v| dot(sub(*v, s.a), n))
                    .fold(f64::INFINITY, f64::min);
                (h.abs(), i)
            })
            .collect();
        order.sort_by(|a, b| a.partial_cmp(b).unwrap());

        for &(_, si) in &order {
            let support = world.environment.supports[si];
            if let Some(candidate) = drop_onto_support(world, &base_pose, &support, jitter, params)
            {
                if placement_is_valid(&candidate, world, grasps, released) {
                    let contacts = support_contacts(world, &candidate, &support, CONTACT_TOL);
                    return Some(Placement {
                        pose: candidate,
                        contacts,
                    });
                }
            }
        }
    }
    None
}

/// Rotate the nearest feature flat (when cheap), translate into touching
/// contact, shift tangentially by `jitter`. None when the resulting contact
/// misses the support segment's extent.
fn drop_onto_support(
    world: &WorldDescription,
    pose: &Pose,
    support: &Segment,
    jitter: f64,
    params: &PlacementParams,
) -> Option<Pose> {
    let n = support.left_normal();
    let t = support.direction();
    let verts = world.object_vertices(pose);
    let heights: Vec<f64> = verts.iter().map(|v| dot(sub(*v, support.a), n)).collect();
    let vmin = heights
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)?;
    let nv = verts.len();
    let pivot = verts[vmin];

    // smallest rotation that lays one incident edge onto the surface
    let mut best_rot = f64::INFINITY;
    for other in [(vmin + 1) % nv, (vmin + nv - 1) % nv] {
        let d = sub(verts[other], pivot);
        let phi = dot(d, n).atan2(dot(d, t));
        for target in [0.0, std::f64::consts::PI] {
            let rot = normalize_angle(target - phi);
            if rot.abs() < best_rot.abs() {
                best_rot = rot;
            }
        }
    }
    let rot = if best_rot.abs() <= params.max_align_rotation {
        best_rot
    } else {
        0.0
    };

    // rotate about the world-frame pivot, then drop along the normal
    let (x, y, theta) = pose.planar_parts();
    let (s, c) = rot.sin_cos();
    let rel = [x - pivot[0], y - pivot[1]];
    let rotated = Pose::planar(
        pivot[0] + c * rel[0] - s * rel[1],
        pivot[1] + s * rel[0] + c * rel[1],
        theta + rot,
    );
    let drop = world
        .object_vertices(&rotated)
        .iter()
        .map(|v| dot(sub(*v, support.a), n))
        .fold(f64::INFINITY, f64::min);
    let shift = add(scale(n, -drop), scale(t, jitter));
    let (rx, ry, rt) = rotated.planar_parts();
    let placed = Pose::planar(rx + shift[0], ry + shift[1], rt);

    // the contact must land on the segment, not its extension
    let contacts = support_contacts(world, &placed, support, CONTACT_TOL);
    if contacts.is_empty() {
        return None;
    }
    Some(placed)
}

fn placement_is_valid(
    pose: &Pose,
    world: &WorldDescription,
    grasps: &GraspSet,
    released: &[usize],
) -> bool {
    // reachable by every arm at its unchanged grasp pose
    for (i, arm) in world.arms.iter().enumerate() {
        if arm.enumerate_ik(&grasps.ee_target(pose, i)).is_empty() {
            return false;
        }
    }
    // object-environment collision: resting contact allowed, penetration not
    let verts = world.object_vertices(pose);
    for obs in &world.environment.obstacles {
        if segment_polygon_distance(obs, &verts) < world.link_inflation {
            return false;
        }
    }
    for sup in &world.environment.supports {
        if crate::geom::segment_polygon_penetration(sup, &verts) > 1e-6 {
            return false;
        }
    }
    // equilibrium with the released arms' grasp contacts excluded
    let mut contacts: Vec<Contact> = Vec::new();
    for sup in &world.environment.supports {
        contacts.extend(support_contacts(world, pose, sup, CONTACT_TOL));
    }
    contacts.extend(grasp_contacts(pose, grasps, released));
    let wrench = gravito_inertial_wrench(world.object.mass, world.com_world(pose), GRAVITY);
    equilibrium_feasible(&wrench, &contacts, world.friction_mu, world.grip_force_max).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm::ArmModel;
    use crate::geom::ConvexPolygon;
    use crate::world::{Environment, ObjectModel};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn wrench_examples() {
        let w = gravito_inertial_wrench(1.0, [0.0, 0.0], GRAVITY);
        assert_eq!(w.force, [0.0, 9.81]);
        assert_eq!(w.moment, 0.0);

        let w = gravito_inertial_wrench(1.0, [0.5, 0.0], GRAVITY);
        assert_relative_eq!(w.moment, 4.905);

        let w2 = gravito_inertial_wrench(2.0, [0.5, 0.0], GRAVITY);
        assert_relative_eq!(w2.force[1], 2.0 * w.force[1]);
        assert_relative_eq!(w2.moment, 2.0 * w.moment);
    }

    fn resting_contacts(x0: f64, x1: f64) -> Vec<Contact> {
        vec![
            Contact::Environment {
                point: [x0, 0.0],
                normal: [0.0, 1.0],
            },
            Contact::Environment {
                point: [x1, 0.0],
                normal: [0.0, 1.0],
            },
        ]
    }

    fn check_witness(wrench: &WrenchGi, contacts: &[Contact], forces: &[Point2]) {
        let mut fsum = [0.0, 0.0];
        let mut msum = 0.0;
        for (c, f) in contacts.iter().zip(forces) {
            fsum = add(fsum, *f);
            msum += cross(c.point(), *f);
        }
        assert!((fsum[0] - wrench.force[0]).abs() < 1e-7);
        assert!((fsum[1] - wrench.force[1]).abs() < 1e-7);
        assert!((msum - wrench.moment).abs() < 1e-7);
    }

    #[test]
    fn rectangle_resting_flat_is_feasible() {
        // COM horizontally inside the support segment
        let wrench = gravito_inertial_wrench(1.0, [0.3, 0.05], GRAVITY);
        let contacts = resting_contacts(0.0, 0.8);
        let forces = equilibrium_feasible(&wrench, &contacts, 0.5, 0.0).expect("stable placement");
        check_witness(&wrench, &contacts, &forces);
        for f in &forces {
            assert!(f[1] >= -1e-9, "normal force must push: {f:?}");
        }
    }

    #[test]
    fn com_outside_support_is_infeasible() {
        // balanced on a single vertex with the COM 0.2 m beyond it
        let wrench = gravito_inertial_wrench(1.0, [1.0, 0.05], GRAVITY);
        let contacts = vec![Contact::Environment {
            point: [0.8, 0.0],
            normal: [0.0, 1.0],
        }];
        assert!(equilibrium_feasible(&wrench, &contacts, 0.5, 0.0).is_none());
    }

    #[test]
    fn grasp_rescues_overhanging_com() {
        let wrench = gravito_inertial_wrench(1.0, [1.0, 0.05], GRAVITY);
        let mut contacts = vec![Contact::Environment {
            point: [0.8, 0.0],
            normal: [0.0, 1.0],
        }];
        contacts.push(Contact::Grasp {
            point: [1.3, 0.05],
            arm: 0,
        });
        let forces =
            equilibrium_feasible(&wrench, &contacts, 0.5, 50.0).expect("grasp balances the moment");
        check_witness(&wrench, &contacts, &forces);
        for f in &forces {
            assert!(f[0].abs() <= 50.0 + 1e-9 && f[1].abs() <= 50.0 + 1e-9);
        }
        // a too-weak grip cannot
        assert!(equilibrium_feasible(&wrench, &contacts, 0.5, 0.5).is_none());
    }

    #[test]
    fn feasibility_invariant_under_scene_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let com = [rng.random_range(-0.5..1.5), rng.random_range(0.0..0.3)];
            let x0 = rng.random_range(-0.2..0.4);
            let x1 = x0 + rng.random_range(0.2..0.8);
            let wrench = gravito_inertial_wrench(1.0, com, GRAVITY);
            let contacts = resting_contacts(x0, x1);
            let verdict = equilibrium_feasible(&wrench, &contacts, 0.4, 0.0).is_some();

            let shift = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let wrench_s =
                gravito_inertial_wrench(1.0, add(com, shift), GRAVITY);
            let contacts_s: Vec<Contact> = contacts
                .iter()
                .map(|c| match c {
                    Contact::Environment { point, normal } => Contact::Environment {
                        point: add(*point, shift),
                        normal: *normal,
                    },
                    Contact::Grasp { point, arm } => Contact::Grasp {
                        point: add(*point, shift),
                        arm: *arm,
                    },
                })
                .collect();
            let verdict_s = equilibrium_feasible(&wrench_s, &contacts_s, 0.4, 0.0).is_some();
            assert_eq!(verdict, verdict_s);
        }
    }

    fn placement_world() -> (WorldDescription, GraspSet) {
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

    #[test]
    fn placement_fixed_point() {
        let (world, grasps) = placement_world();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // already touching, level, stable
        let t = Pose::planar(0.55, 0.05, 0.0);
        let got = sample_placement_config(
            &t,
            &world,
            &grasps,
            &[1],
            &mut rng,
            &PlacementParams::default(),
        )
        .unwrap();
        assert!(got.pose.approx_eq(&t, 1e-9));
        assert_eq!(got.contacts.len(), 2);
    }

    #[test]
    fn placement_pure_drop() {
        let (world, grasps) = placement_world();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = Pose::planar(0.55, 0.15, 0.0);
        let got = sample_placement_config(
            &t,
            &world,
            &grasps,
            &[0],
            &mut rng,
            &PlacementParams::default(),
        )
        .unwrap();
        let (x, y, theta) = got.pose.planar_parts();
        assert_relative_eq!(x, 0.55, epsilon = 1e-12);
        assert_relative_eq!(y, 0.05, epsilon = 1e-9);
        assert!(theta.abs() < 1e-9);
    }

    #[test]
    fn placement_aligns_tilted_edge() {
        let (world, grasps) = placement_world();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tilt = 0.2;
        let t = Pose::planar(0.55, 0.3, tilt);
        let got = sample_placement_config(
            &t,
            &world,
            &grasps,
            &[1],
            &mut rng,
            &PlacementParams::default(),
        )
        .unwrap();
        let (_, _, theta) = got.pose.planar_parts();
        // rotated by exactly the tilt so the closest edge lies flat
        assert_relative_eq!(theta, 0.0, epsilon = 1e-9);
        assert_eq!(got.contacts.len(), 2);
        // every returned pose touches the surface
        for c in &got.contacts {
            assert!(c.point()[1].abs() <= 1e-9);
        }
    }

    #[test]
    fn placement_none_without_support_below() {
        let (mut world, grasps) = placement_world();
        // support far to the side: drops miss its extent
        world.environment.supports = vec![Segment::new([5.0, 0.0], [6.0, 0.0])];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t = Pose::planar(0.55, 0.15, 0.0);
        assert!(sample_placement_config(
            &t,
            &world,
            &grasps,
            &[1],
            &mut rng,
            &PlacementParams::default(),
        )
        .is_none());
    }

    #[test]
    fn steep_feature_keeps_vertex_contact() {
        let (world, grasps) = placement_world();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        // tilted well past the alignment threshold: rests on a corner
        let tilt = 0.6;
        let t = Pose::planar(0.55, 0.4, tilt);
        let got = sample_placement_config(
            &t,
            &world,
            &grasps,
            &[1],
            &mut rng,
            &PlacementParams::default(),
        );
        if let Some(p) = got {
            let (_, _, theta) = p.pose.planar_parts();
            // a corner placement is allowed to keep its rotation on the
            // unperturbed first iteration
            if (theta - tilt).abs() < 1e-9 {
                assert_eq!(p.contacts.len(), 1);
            }
        }
    }
}
