//! Planar serial-arm models: forward kinematics, Jacobians, exhaustive
//! analytic IK enumeration, damped-least-squares differential IK following,
//! joint-limit proximity checks and the joint-range flexibility score.
//!
//! The reference arm is a planar 3R chain. Inverse-kinematics enumeration
//! reduces the wrist position to a 2R subproblem, giving at most two elbow
//! classes per end-effector pose; the sign of the elbow joint is the class
//! label the planner tracks.

use crate::geom::{Point2, Segment};
use crate::pose::{normalize_angle, Pose};
use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Joint angles of one arm, radians, one entry per joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Largest absolute per-joint difference.
    pub fn max_abs_diff(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &JointConfig, tol: f64) -> bool {
        self.len() == other.len() && self.max_abs_diff(other) <= tol
    }
}

/// Elbow-class label: sign of the 2R elbow joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElbowClass {
    Down,
    Up,
    Straight,
}

/// Why a differential IK step was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IkStepError {
    /// Converged point violates joint limits.
    Limit,
    /// No convergence within the iteration budget.
    Diverged,
    /// Converged but jumped: per-joint motion above the cap, or the elbow
    /// class flipped.
    Jump,
}

impl std::fmt::Display for IkStepError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IkStepError::Limit => write!(f, "LIMIT"),
            IkStepError::Diverged => write!(f, "DIVERGED"),
            IkStepError::Jump => write!(f, "JUMP"),
        }
    }
}

/// Damped-least-squares parameters for [`ArmModel::differential_ik_step`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiffIkParams {
    pub damping: f64,
    pub max_iters: u32,
    /// Convergence tolerance on the task-space residual norm.
    pub tol: f64,
    /// Per-joint step cap that keeps consecutive configurations in the same
    /// configuration-space component.
    pub dq_max: f64,
}

impl Default for DiffIkParams {
    fn default() -> Self {
        DiffIkParams {
            damping: 1e-4,
            max_iters: 100,
            tol: 1e-10,
            dq_max: 0.2,
        }
    }
}

/// A planar serial arm with revolute joints and per-joint limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArmModelRepr", into = "ArmModelRepr")]
pub struct ArmModel {
    base: Pose,
    link_lengths: Vec<f64>,
    q_lower: Vec<f64>,
    q_upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ArmModelRepr {
    base: Pose,
    links: Vec<f64>,
    q_lower: Vec<f64>,
    q_upper: Vec<f64>,
}

impl From<ArmModel> for ArmModelRepr {
    fn from(a: ArmModel) -> Self {
        ArmModelRepr {
            base: a.base,
            links: a.link_lengths,
            q_lower: a.q_lower,
            q_upper: a.q_upper,
        }
    }
}

impl TryFrom<ArmModelRepr> for ArmModel {
    type Error = String;

    fn try_from(r: ArmModelRepr) -> Result<Self, Self::Error> {
        ArmModel::new(r.base, r.links, r.q_lower, r.q_upper)
    }
}

impl ArmModel {
    pub fn new(
        base: Pose,
        link_lengths: Vec<f64>,
        q_lower: Vec<f64>,
        q_upper: Vec<f64>,
    ) -> Result<Self, String> {
        if !base.is_planar() {
            return Err("arm base must be a planar pose".into());
        }
        if link_lengths.is_empty() {
            return Err("arm needs at least one link".into());
        }
        if link_lengths.iter().any(|&l| !(l > 0.0)) {
            return Err("link lengths must be positive".into());
        }
        if q_lower.len() != link_lengths.len() || q_upper.len() != link_lengths.len() {
            return Err("joint limit arrays must match the number of links".into());
        }
        for (lo, hi) in q_lower.iter().zip(&q_upper) {
            if !(lo < hi) {
                return Err(format!("joint limits must satisfy lower < upper ({lo} vs {hi})"));
            }
        }
        Ok(ArmModel {
            base,
            link_lengths,
            q_lower,
            q_upper,
        })
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn base(&self) -> &Pose {
        &self.base
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn q_lower(&self) -> &[f64] {
        &self.q_lower
    }

    pub fn q_upper(&self) -> &[f64] {
        &self.q_upper
    }

    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum()
    }

    pub fn within_limits(&self, q: &JointConfig, tol: f64) -> bool {
        q.0.iter()
            .zip(self.q_lower.iter().zip(&self.q_upper))
            .all(|(&qi, (&lo, &hi))| qi >= lo - tol && qi <= hi + tol)
    }

    pub fn clamp_to_limits(&self, q: &JointConfig) -> JointConfig {
        JointConfig(
            q.0.iter()
                .zip(self.q_lower.iter().zip(&self.q_upper))
                .map(|(&qi, (&lo, &hi))| qi.clamp(lo, hi))
                .collect(),
        )
    }

    pub fn midrange(&self) -> JointConfig {
        JointConfig(
            self.q_lower
                .iter()
                .zip(&self.q_upper)
                .map(|(lo, hi)| 0.5 * (lo + hi))
                .collect(),
        )
    }

    /// World pose of the end-effector.
    pub fn forward_kinematics(&self, q: &JointConfig) -> Pose {
        assert_eq!(q.len(), self.dof(), "joint vector length mismatch");
        let mut pose = self.base.clone();
        for (&l, &qi) in self.link_lengths.iter().zip(&q.0) {
            let (s, c) = qi.sin_cos();
            pose = pose.compose(&Pose::planar(l * c, l * s, qi));
        }
        pose
    }

    /// World positions of each joint origin followed by the end-effector.
    pub fn joint_points(&self, q: &JointConfig) -> Vec<Point2> {
        assert_eq!(q.len(), self.dof());
        let mut pts = Vec::with_capacity(self.dof() + 1);
        let mut pose = self.base.clone();
        pts.push({
            let (x, y, _) = pose.planar_parts();
            [x, y]
        });
        for (&l, &qi) in self.link_lengths.iter().zip(&q.0) {
            let (s, c) = qi.sin_cos();
            pose = pose.compose(&Pose::planar(l * c, l * s, qi));
            let (x, y, _) = pose.planar_parts();
            pts.push([x, y]);
        }
        pts
    }

    /// Link segments in the world frame, one per link.
    pub fn link_segments(&self, q: &JointConfig) -> Vec<Segment> {
        let pts = self.joint_points(q);
        pts.windows(2).map(|w| Segment::new(w[0], w[1])).collect()
    }

    /// Analytic task Jacobian (rows x-dot, y-dot, theta-dot).
    pub fn jacobian(&self, q: &JointConfig) -> DMatrix<f64> {
        let pts = self.joint_points(q);
        let ee = pts[self.dof()];
        let mut j = DMatrix::zeros(3, self.dof());
        for (col, origin) in pts[..self.dof()].iter().enumerate() {
            j[(0, col)] = -(ee[1] - origin[1]);
            j[(1, col)] = ee[0] - origin[0];
            j[(2, col)] = 1.0;
        }
        j
    }

    /// Elbow-class label of a configuration (sign of joint 1).
    pub fn elbow_class(&self, q: &JointConfig) -> ElbowClass {
        if self.dof() < 2 || q.0[1] == 0.0 {
            ElbowClass::Straight
        } else if q.0[1] < 0.0 {
            ElbowClass::Down
        } else {
            ElbowClass::Up
        }
    }

    /// All joint-limit-respecting IK solutions for a planar 3R arm, ordered
    /// elbow-down first. Wraps each joint angle into the limit window, so
    /// limits wider than one turn can yield extra representatives. Returns
    /// an empty vector when the target is unreachable.
    pub fn enumerate_ik(&self, target: &Pose) -> Vec<JointConfig> {
        assert_eq!(self.dof(), 3, "analytic enumeration covers planar 3R arms");
        let rel = self.base.inverse().compose(target);
        let (tx, ty, phi) = rel.planar_parts();
        let (l1, l2, l3) = (
            self.link_lengths[0],
            self.link_lengths[1],
            self.link_lengths[2],
        );
        let wx = tx - l3 * phi.cos();
        let wy = ty - l3 * phi.sin();
        let r2 = wx * wx + wy * wy;
        let mut c = (r2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        if c > 1.0 + 1e-9 || c < -1.0 - 1e-9 {
            return Vec::new();
        }
        c = c.clamp(-1.0, 1.0);
        let mut elbow = c.acos();
        // acos amplifies rounding near the fold/extension singularities;
        // snap so the two branches collapse into the single boundary class
        if elbow < 1e-7 {
            elbow = 0.0;
        } else if elbow > PI - 1e-7 {
            elbow = PI;
        }

        let mut solutions = Vec::new();
        for q2 in [-elbow, elbow] {
            let q1 = wy.atan2(wx) - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
            let q3 = phi - q1 - q2;
            let nominal = [normalize_angle(q1), normalize_angle(q2), normalize_angle(q3)];
            let mut reps: Vec<Vec<f64>> = Vec::new();
            for (j, &a) in nominal.iter().enumerate() {
                let mut js = Vec::new();
                for k in [-1.0, 0.0, 1.0] {
                    let cand = a + 2.0 * PI * k;
                    if cand >= self.q_lower[j] - 1e-9 && cand <= self.q_upper[j] + 1e-9 {
                        js.push(cand);
                    }
                }
                if js.is_empty() {
                    reps.clear();
                    break;
                }
                reps.push(js);
            }
            if reps.len() != 3 {
                continue;
            }
            for &a0 in &reps[0] {
                for &a1 in &reps[1] {
                    for &a2 in &reps[2] {
                        solutions.push(JointConfig(vec![a0, a1, a2]));
                    }
                }
            }
        }
        solutions.dedup_by(|a, b| a.max_abs_diff(b) <= 1e-9);
        solutions
    }

    /// One damped-least-squares IK solve warm-started at `q_prev`.
    ///
    /// Succeeds only when the converged configuration stays within joint
    /// limits, moves every joint at most `dq_max`, and keeps the elbow-class
    /// label; that combination is what keeps a followed path inside one
    /// configuration-space component.
    pub fn differential_ik_step(
        &self,
        q_prev: &JointConfig,
        target: &Pose,
        params: &DiffIkParams,
    ) -> Result<JointConfig, IkStepError> {
        assert_eq!(q_prev.len(), self.dof());
        let mut q = q_prev.clone();
        let lambda2 = params.damping * params.damping;
        let mut converged = false;
        for _ in 0..params.max_iters {
            let current = self.forward_kinematics(&q);
            let (cx, cy, ct) = current.planar_parts();
            let (tx, ty, tt) = target.planar_parts();
            let err = Vector3::new(tx - cx, ty - cy, normalize_angle(tt - ct));
            if err.norm() <= params.tol {
                converged = true;
                break;
            }
            let j = self.jacobian(&q);
            let jjt = &j * j.transpose();
            let mut damped = Matrix3::zeros();
            for r in 0..3 {
                for cidx in 0..3 {
                    damped[(r, cidx)] = jjt[(r, cidx)];
                }
                damped[(r, r)] += lambda2;
            }
            let rhs = damped
                .lu()
                .solve(&err)
                .ok_or(IkStepError::Diverged)?;
            let dq = j.transpose() * rhs;
            for (qi, d) in q.0.iter_mut().zip(dq.iter()) {
                *qi += d;
            }
        }
        if !converged {
            return Err(IkStepError::Diverged);
        }
        // the jump checks come first: a LIMIT verdict then implies the
        // previous configuration was within dq_max of the violated limit
        if q.max_abs_diff(q_prev) > params.dq_max {
            return Err(IkStepError::Jump);
        }
        if self.dof() >= 2 && q_prev.0[1] * q.0[1] < 0.0 {
            return Err(IkStepError::Jump);
        }
        if !self.within_limits(&q, 1e-9) {
            return Err(IkStepError::Limit);
        }
        Ok(q)
    }

    /// Per-joint limit-proximity flags plus their disjunction. A joint is
    /// flagged when `q <= lower + eps` or `q >= upper - eps` (closed
    /// comparisons).
    pub fn is_near_boundary(&self, q: &JointConfig, eps: f64) -> (Vec<bool>, bool) {
        assert!(eps > 0.0);
        let flags: Vec<bool> = q
            .0
            .iter()
            .zip(self.q_lower.iter().zip(&self.q_upper))
            .map(|(&qi, (&lo, &hi))| qi <= lo + eps || qi >= hi - eps)
            .collect();
        let any = flags.iter().any(|&f| f);
        (flags, any)
    }

    /// Joint-range flexibility score `(q_u - q) . (q - q_l)`, maximal at the
    /// midpoint of every joint range.
    pub fn flexibility_score(&self, q: &JointConfig) -> f64 {
        q.0.iter()
            .zip(self.q_lower.iter().zip(&self.q_upper))
            .map(|(&qi, (&lo, &hi))| (hi - qi) * (qi - lo))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_arm() -> ArmModel {
        ArmModel::new(
            Pose::identity_planar(),
            vec![0.5, 0.4, 0.3],
            vec![-PI, -PI, -PI],
            vec![PI, PI, PI],
        )
        .unwrap()
    }

    fn random_q(arm: &ArmModel, rng: &mut ChaCha8Rng) -> JointConfig {
        JointConfig(
            arm.q_lower()
                .iter()
                .zip(arm.q_upper())
                .map(|(&lo, &hi)| rng.random_range(lo..hi))
                .collect(),
        )
    }

    /// Independent FK oracle: explicit 3x3 homogeneous matrix products.
    fn fk_matrix_oracle(arm: &ArmModel, q: &JointConfig) -> (f64, f64, f64) {
        fn mat(x: f64, y: f64, t: f64) -> [[f64; 3]; 3] {
            [
                [t.cos(), -t.sin(), x],
                [t.sin(), t.cos(), y],
                [0.0, 0.0, 1.0],
            ]
        }
        fn mul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
            let mut out = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        out[i][j] += a[i][k] * b[k][j];
                    }
                }
            }
            out
        }
        let (bx, by, bt) = arm.base().planar_parts();
        let mut m = mat(bx, by, bt);
        for (&l, &qi) in arm.link_lengths().iter().zip(&q.0) {
            m = mul(m, mat(0.0, 0.0, qi));
            m = mul(m, mat(l, 0.0, 0.0));
        }
        (m[0][2], m[1][2], m[1][0].atan2(m[0][0]))
    }

    #[test]
    fn fk_straight_arm_sums_lengths() {
        let arm = test_arm();
        let p = arm.forward_kinematics(&JointConfig(vec![0.0, 0.0, 0.0]));
        let (x, y, t) = p.planar_parts();
        assert_relative_eq!(x, 1.2);
        assert_eq!((y, t), (0.0, 0.0));

        let p = arm.forward_kinematics(&JointConfig(vec![PI / 2.0, 0.0, 0.0]));
        let (x, y, t) = p.planar_parts();
        assert_relative_eq!(x, 0.0, epsilon = 1e-12);
        assert_relative_eq!(y, 1.2);
        assert_relative_eq!(t, PI / 2.0);
    }

    #[test]
    fn fk_matches_matrix_product_oracle() {
        let arm = ArmModel::new(
            Pose::planar(0.3, -0.2, 0.7),
            vec![0.5, 0.4, 0.3],
            vec![-PI, -PI, -PI],
            vec![PI, PI, PI],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let q = random_q(&arm, &mut rng);
            let (x, y, t) = arm.forward_kinematics(&q).planar_parts();
            let (ox, oy, ot) = fk_matrix_oracle(&arm, &q);
            assert_relative_eq!(x, ox, epsilon = 1e-12);
            assert_relative_eq!(y, oy, epsilon = 1e-12);
            assert_relative_eq!(normalize_angle(t - ot), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn jacobian_structure() {
        let arm = test_arm();
        let j = arm.jacobian(&JointConfig(vec![0.0, 0.0, 0.0]));
        for col in 0..3 {
            assert_eq!(j[(2, col)], 1.0);
        }
        assert_relative_eq!(j[(1, 0)], 1.2); // full reach as moment arm
        assert_relative_eq!(j[(1, 1)], 0.7);
        assert_relative_eq!(j[(1, 2)], 0.3);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let arm = ArmModel::new(
            Pose::planar(-0.1, 0.4, -0.3),
            vec![0.5, 0.4, 0.3],
            vec![-PI, -PI, -PI],
            vec![PI, PI, PI],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-6;
        for _ in 0..100 {
            let q = random_q(&arm, &mut rng);
            let j = arm.jacobian(&q);
            for col in 0..3 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp.0[col] += h;
                qm.0[col] -= h;
                let (xp, yp, tp) = arm.forward_kinematics(&qp).planar_parts();
                let (xm, ym, tm) = arm.forward_kinematics(&qm).planar_parts();
                let fd = [
                    (xp - xm) / (2.0 * h),
                    (yp - ym) / (2.0 * h),
                    normalize_angle(tp - tm) / (2.0 * h),
                ];
                for row in 0..3 {
                    assert!(
                        (j[(row, col)] - fd[row]).abs() <= 1e-5,
                        "J[{row},{col}] = {} vs fd {}",
                        j[(row, col)],
                        fd[row]
                    );
                }
            }
        }
    }

    #[test]
    fn enumerate_two_elbow_classes() {
        let arm = test_arm();
        let sols = arm.enumerate_ik(&Pose::planar(0.8, 0.2, 0.0));
        assert_eq!(sols.len(), 2);
        let expected = (-0.3f64).acos();
        assert_relative_eq!(sols[0].0[1], -expected, epsilon = 1e-12);
        assert_relative_eq!(sols[1].0[1], expected, epsilon = 1e-12);
        for s in &sols {
            let fk = arm.forward_kinematics(s);
            assert!(fk.approx_eq(&Pose::planar(0.8, 0.2, 0.0), 1e-8));
        }
        assert_eq!(arm.elbow_class(&sols[0]), ElbowClass::Down);
        assert_eq!(arm.elbow_class(&sols[1]), ElbowClass::Up);
    }

    #[test]
    fn enumerate_boundary_and_unreachable() {
        let arm = test_arm();
        let sols = arm.enumerate_ik(&Pose::planar(1.2, 0.0, 0.0));
        assert_eq!(sols.len(), 1);
        assert!(sols[0].max_abs_diff(&JointConfig(vec![0.0, 0.0, 0.0])) < 1e-9);

        assert!(arm.enumerate_ik(&Pose::planar(5.0, 0.0, 0.0)).is_empty());
    }

    #[test]
    fn enumerate_respects_limits() {
        let arm = ArmModel::new(
            Pose::identity_planar(),
            vec![0.5, 0.4, 0.3],
            vec![-PI, 0.1, -PI],
            vec![PI, PI, PI],
        )
        .unwrap();
        // only the elbow-up branch fits the [0.1, pi] elbow window
        let sols = arm.enumerate_ik(&Pose::planar(0.8, 0.2, 0.0));
        assert_eq!(sols.len(), 1);
        assert!(sols[0].0[1] > 0.0);
    }

    #[test]
    fn enumerate_is_complete_on_forward_samples() {
        let arm = test_arm();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..500 {
            let q = random_q(&arm, &mut rng);
            let target = arm.forward_kinematics(&q);
            let sols = arm.enumerate_ik(&target);
            assert!(
                sols.iter().any(|s| s.max_abs_diff(&q) < 1e-6),
                "no enumerated solution recovers {q:?}"
            );
        }
    }

    #[test]
    fn differential_ik_fixed_point() {
        let arm = test_arm();
        let q = JointConfig(vec![0.4, -0.9, 0.3]);
        let target = arm.forward_kinematics(&q);
        let out = arm
            .differential_ik_step(&q, &target, &DiffIkParams::default())
            .unwrap();
        assert_eq!(out, q);
    }

    #[test]
    fn differential_ik_fails_at_fold_singularity() {
        let arm = test_arm();
        let q = JointConfig(vec![0.0, 0.0, 0.0]);
        // condition number of J at the straight arm is large in the fold
        // direction; pulling outward 1 mm is unreachable
        let target = Pose::planar(1.201, 0.0, 0.0);
        let err = arm
            .differential_ik_step(&q, &target, &DiffIkParams::default())
            .unwrap_err();
        assert!(matches!(err, IkStepError::Diverged | IkStepError::Jump));
    }

    #[test]
    fn differential_ik_matches_class_matched_solution() {
        let arm = test_arm();
        let q_prev = JointConfig(vec![0.5, -1.0, 0.4]);
        let start = arm.forward_kinematics(&q_prev);
        let (sx, sy, st) = start.planar_parts();
        let target = Pose::planar(sx + 0.007, sy - 0.007, st + 0.001);
        let stepped = arm
            .differential_ik_step(&q_prev, &target, &DiffIkParams::default())
            .unwrap();
        let class = arm.elbow_class(&q_prev);
        let matched = arm
            .enumerate_ik(&target)
            .into_iter()
            .find(|s| arm.elbow_class(s) == class)
            .expect("class-matched analytic solution");
        assert!(stepped.max_abs_diff(&matched) < 1e-6);
    }

    #[test]
    fn accepted_steps_preserve_elbow_class() {
        let arm = test_arm();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let mut q = JointConfig(vec![
                rng.random_range(-1.0..1.0),
                rng.random_range(0.3..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 },
                rng.random_range(-1.0..1.0),
            ]);
            let start_class = arm.elbow_class(&q);
            for _ in 0..40 {
                let pose = arm.forward_kinematics(&q);
                let (x, y, t) = pose.planar_parts();
                let target = Pose::planar(
                    x + rng.random_range(-0.02..0.02),
                    y + rng.random_range(-0.02..0.02),
                    t + rng.random_range(-0.05..0.05),
                );
                match arm.differential_ik_step(&q, &target, &DiffIkParams::default()) {
                    Ok(next) => {
                        assert_eq!(arm.elbow_class(&next), start_class);
                        q = next;
                    }
                    Err(_) => break,
                }
            }
        }
    }

    #[test]
    fn boundary_flags() {
        let arm = test_arm();
        let (flags, any) = arm.is_near_boundary(&arm.midrange(), 0.1);
        assert!(!any);
        assert_eq!(flags, vec![false, false, false]);

        let (flags, any) = arm.is_near_boundary(&JointConfig(vec![0.0, PI, 0.0]), 0.1);
        assert!(any);
        assert_eq!(flags, vec![false, true, false]);

        // closed comparison exactly at upper - eps
        let (flags, _) = arm.is_near_boundary(&JointConfig(vec![PI - 0.1, 0.0, 0.0]), 0.1);
        assert!(flags[0]);
    }

    #[test]
    fn flexibility_score_values() {
        let arm = test_arm();
        assert_relative_eq!(arm.flexibility_score(&arm.midrange()), 3.0 * PI * PI);
        assert_relative_eq!(
            arm.flexibility_score(&JointConfig(vec![PI, 0.0, 0.0])),
            2.0 * PI * PI
        );
    }

    #[test]
    fn flexibility_reorder_invariance_and_concavity() {
        let arm = ArmModel::new(
            Pose::identity_planar(),
            vec![0.5, 0.4, 0.3],
            vec![-1.0, -2.0, -0.5],
            vec![2.0, 1.0, 2.5],
        )
        .unwrap();
        let q = JointConfig(vec![0.3, -0.4, 1.0]);
        // permute joints together with their limits
        let arm_perm = ArmModel::new(
            Pose::identity_planar(),
            vec![0.4, 0.3, 0.5],
            vec![-2.0, -0.5, -1.0],
            vec![1.0, 2.5, 2.0],
        )
        .unwrap();
        let q_perm = JointConfig(vec![-0.4, 1.0, 0.3]);
        assert_relative_eq!(arm.flexibility_score(&q), arm_perm.flexibility_score(&q_perm));

        // strictly concave along each joint axis: negative second difference
        for j in 0..3 {
            let h = 0.05;
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp.0[j] += h;
            qm.0[j] -= h;
            let second = arm.flexibility_score(&qp) - 2.0 * arm.flexibility_score(&q)
                + arm.flexibility_score(&qm);
            assert!(second < 0.0);
        }
    }

    #[test]
    fn most_flexible_solution_is_brute_force_argmax() {
        let arm = ArmModel::new(
            Pose::identity_planar(),
            vec![0.5, 0.4, 0.3],
            vec![-2.8, -2.8, -2.8],
            vec![2.8, 2.0, 2.8],
        )
        .unwrap();
        let sols = arm.enumerate_ik(&Pose::planar(0.8, 0.2, 0.0));
        assert_eq!(sols.len(), 2);
        let best = sols
            .iter()
            .max_by(|a, b| {
                arm.flexibility_score(a)
                    .partial_cmp(&arm.flexibility_score(b))
                    .unwrap()
            })
            .unwrap();
        // the elbow-down branch sits far from the tight upper elbow limit
        assert_eq!(arm.elbow_class(best), ElbowClass::Down);
    }

    #[test]
    fn arm_json_round_trip() {
        let arm = test_arm();
        let s = serde_json::to_string(&arm).unwrap();
        assert!(s.contains("\"links\""));
        let back: ArmModel = serde_json::from_str(&s).unwrap();
        assert_eq!(arm, back);

        let bad = r#"{"base":{"planar":[0,0,0]},"links":[0.5],"q_lower":[1.0],"q_upper":[0.0]}"#;
        assert!(serde_json::from_str::<ArmModel>(bad).is_err());
    }
}
