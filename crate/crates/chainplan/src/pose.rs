//! Rigid-body pose algebra for the planner: composition, inversion, uniform
//! sampling, interpolation, discretization and the weighted distance metric.
//!
//! Planar poses are the primary representation (the testbed is a planar
//! dual-arm cell); spatial poses carry the same operations so the object
//! math generalizes.

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Normalize an angle to the half-open interval `(-pi, pi]`.
///
/// Angles already in range are returned bit-unchanged.
pub fn normalize_angle(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let r = theta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Rigid transform of the object or an end-effector.
///
/// Angles are radians, lengths meters. Planar theta is kept normalized to
/// `(-pi, pi]` after every operation; spatial rotations are unit quaternions.
#[derive(Debug, Clone, PartialEq)]
#[derive(Serialize, Deserialize)]
#[serde(try_from = "PoseRepr", into = "PoseRepr")]
pub enum Pose {
    Planar {
        x: f64,
        y: f64,
        theta: f64,
    },
    Spatial {
        translation: Vector3<f64>,
        rotation: UnitQuaternion<f64>,
    },
}

/// Wire form: `{"planar":[x,y,theta]}` or `{"spatial":{"t":[x,y,z],"q":[w,x,y,z]}}`
/// with the quaternion scalar-first.
#[derive(Serialize, Deserialize)]
enum PoseRepr {
    #[serde(rename = "planar")]
    Planar([f64; 3]),
    #[serde(rename = "spatial")]
    Spatial { t: [f64; 3], q: [f64; 4] },
}

impl From<Pose> for PoseRepr {
    fn from(p: Pose) -> Self {
        match p {
            Pose::Planar { x, y, theta } => PoseRepr::Planar([x, y, theta]),
            Pose::Spatial {
                translation,
                rotation,
            } => PoseRepr::Spatial {
                t: [translation.x, translation.y, translation.z],
                q: [rotation.w, rotation.i, rotation.j, rotation.k],
            },
        }
    }
}

impl TryFrom<PoseRepr> for Pose {
    type Error = String;

    fn try_from(r: PoseRepr) -> Result<Self, Self::Error> {
        match r {
            PoseRepr::Planar([x, y, theta]) => {
                if !(x.is_finite() && y.is_finite() && theta.is_finite()) {
                    return Err("planar pose has a non-finite field".into());
                }
                Ok(Pose::planar(x, y, theta))
            }
            PoseRepr::Spatial { t, q } => {
                let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
                let norm = quat.norm();
                if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
                    return Err(format!(
                        "spatial rotation quaternion has norm {norm}, expected 1 within 1e-9"
                    ));
                }
                Ok(Pose::Spatial {
                    translation: Vector3::new(t[0], t[1], t[2]),
                    rotation: UnitQuaternion::from_quaternion(quat),
                })
            }
        }
    }
}

impl Pose {
    pub fn planar(x: f64, y: f64, theta: f64) -> Self {
        Pose::Planar {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn identity_planar() -> Self {
        Pose::Planar {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
        }
    }

    pub fn spatial(translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Pose::Spatial {
            translation,
            rotation,
        }
    }

    pub fn is_planar(&self) -> bool {
        matches!(self, Pose::Planar { .. })
    }

    /// Planar components `(x, y, theta)`. Panics on a spatial pose.
    pub fn planar_parts(&self) -> (f64, f64, f64) {
        match *self {
            Pose::Planar { x, y, theta } => (x, y, theta),
            Pose::Spatial { .. } => panic!("expected a planar pose"),
        }
    }

    /// Transform a point from this pose's local frame to the parent frame.
    pub fn transform_point(&self, p: [f64; 2]) -> [f64; 2] {
        let (x, y, theta) = self.planar_parts();
        let (s, c) = theta.sin_cos();
        [x + c * p[0] - s * p[1], y + s * p[0] + c * p[1]]
    }

    /// `self * other`: apply `other` in this pose's frame.
    ///
    /// Both poses must be the same variant.
    pub fn compose(&self, other: &Pose) -> Pose {
        match (self, other) {
            (
                Pose::Planar { x, y, theta },
                Pose::Planar {
                    x: ox,
                    y: oy,
                    theta: ot,
                },
            ) => {
                let (s, c) = theta.sin_cos();
                Pose::planar(x + c * ox - s * oy, y + s * ox + c * oy, theta + ot)
            }
            (
                Pose::Spatial {
                    translation: t,
                    rotation: r,
                },
                Pose::Spatial {
                    translation: ot,
                    rotation: or,
                },
            ) => Pose::Spatial {
                translation: t + r.transform_vector(ot),
                rotation: r * or,
            },
            _ => panic!("cannot compose planar and spatial poses"),
        }
    }

    pub fn inverse(&self) -> Pose {
        match *self {
            Pose::Planar { x, y, theta } => {
                let (s, c) = theta.sin_cos();
                Pose::planar(-c * x - s * y, s * x - c * y, -theta)
            }
            Pose::Spatial {
                translation,
                rotation,
            } => {
                let inv = rotation.inverse();
                Pose::Spatial {
                    translation: -inv.transform_vector(&translation),
                    rotation: inv,
                }
            }
        }
    }

    pub fn translation_distance(&self, other: &Pose) -> f64 {
        match (self, other) {
            (
                Pose::Planar { x, y, .. },
                Pose::Planar {
                    x: ox, y: oy, ..
                },
            ) => ((x - ox).powi(2) + (y - oy).powi(2)).sqrt(),
            (
                Pose::Spatial { translation: t, .. },
                Pose::Spatial {
                    translation: ot, ..
                },
            ) => (t - ot).norm(),
            _ => panic!("cannot compare planar and spatial poses"),
        }
    }

    /// Minimal geodesic rotation distance in radians.
    pub fn rotation_distance(&self, other: &Pose) -> f64 {
        match (self, other) {
            (Pose::Planar { theta, .. }, Pose::Planar { theta: ot, .. }) => {
                normalize_angle(theta - ot).abs()
            }
            (Pose::Spatial { rotation: r, .. }, Pose::Spatial { rotation: or, .. }) => {
                r.angle_to(or)
            }
            _ => panic!("cannot compare planar and spatial poses"),
        }
    }

    /// Weighted metric: translation distance plus `w_rot` times the geodesic
    /// rotation distance. Symmetric, zero iff the poses coincide.
    pub fn distance(&self, other: &Pose, w_rot: f64) -> f64 {
        debug_assert!(w_rot > 0.0, "w_rot must be positive");
        self.translation_distance(other) + w_rot * self.rotation_distance(other)
    }

    /// Equality within `tol` in every field (angle compared wrapped).
    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        self.translation_distance(other) <= tol && self.rotation_distance(other) <= tol
    }
}

/// Axis-aligned translation box used by the object-pose sampler.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoseBounds {
    Planar { min: [f64; 2], max: [f64; 2] },
    Spatial { min: [f64; 3], max: [f64; 3] },
}

impl PoseBounds {
    pub fn validate(&self) -> Result<(), String> {
        let (min, max): (&[f64], &[f64]) = match self {
            PoseBounds::Planar { min, max } => (min, max),
            PoseBounds::Spatial { min, max } => (min, max),
        };
        for (lo, hi) in min.iter().zip(max) {
            if !(lo <= hi) {
                return Err(format!("degenerate bounds: min {lo} > max {hi}"));
            }
        }
        Ok(())
    }
}

fn uniform_in(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Sample a pose with translation uniform in `bounds` and rotation uniform on
/// the rotation group (planar: angle uniform on `(-pi, pi]`; spatial: uniform
/// unit quaternion by subgroup sampling).
pub fn sample_object_pose(bounds: &PoseBounds, rng: &mut impl Rng) -> Pose {
    match bounds {
        PoseBounds::Planar { min, max } => {
            let x = uniform_in(rng, min[0], max[0]);
            let y = uniform_in(rng, min[1], max[1]);
            let theta = normalize_angle(rng.random_range(0.0..2.0 * PI));
            Pose::planar(x, y, theta)
        }
        PoseBounds::Spatial { min, max } => {
            let t = Vector3::new(
                uniform_in(rng, min[0], max[0]),
                uniform_in(rng, min[1], max[1]),
                uniform_in(rng, min[2], max[2]),
            );
            let u1: f64 = rng.random_range(0.0..1.0);
            let u2: f64 = rng.random_range(0.0..2.0 * PI);
            let u3: f64 = rng.random_range(0.0..2.0 * PI);
            let a = (1.0 - u1).sqrt();
            let b = u1.sqrt();
            let q = Quaternion::new(b * u3.cos(), a * u2.sin(), a * u2.cos(), b * u3.sin());
            Pose::Spatial {
                translation: t,
                rotation: UnitQuaternion::from_quaternion(q),
            }
        }
    }
}

/// Interpolated pose path: straight-line translation with shortest-geodesic
/// rotation, parameterized over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct PosePath {
    start: Pose,
    end: Pose,
    /// Planar: wrapped angle delta. Spatial: rotation angle about `axis`.
    rot_delta: f64,
    /// Only set for spatial paths.
    axis: Option<Unit<Vector3<f64>>>,
    translation_len: f64,
}

impl PosePath {
    pub fn start(&self) -> &Pose {
        &self.start
    }

    pub fn end(&self) -> &Pose {
        &self.end
    }

    pub fn translation_length(&self) -> f64 {
        self.translation_len
    }

    pub fn rotation_length(&self) -> f64 {
        self.rot_delta.abs()
    }

    /// Length of the path under the weighted pose metric. The path is a
    /// metric geodesic, so `distance(eval(s), eval(t)) = |s - t| * length`.
    pub fn metric_length(&self, w_rot: f64) -> f64 {
        self.translation_len + w_rot * self.rot_delta.abs()
    }

    /// Evaluate at `s` in `[0, 1]`; endpoints are reproduced exactly.
    pub fn eval(&self, s: f64) -> Pose {
        if s <= 0.0 {
            return self.start.clone();
        }
        if s >= 1.0 {
            return self.end.clone();
        }
        match (&self.start, &self.end) {
            (
                Pose::Planar { x, y, theta },
                Pose::Planar {
                    x: ex, y: ey, ..
                },
            ) => Pose::planar(
                x + s * (ex - x),
                y + s * (ey - y),
                theta + s * self.rot_delta,
            ),
            (
                Pose::Spatial {
                    translation: t,
                    rotation: r,
                },
                Pose::Spatial {
                    translation: et, ..
                },
            ) => {
                let rot = match &self.axis {
                    Some(axis) => r * UnitQuaternion::from_axis_angle(axis, s * self.rot_delta),
                    None => *r,
                };
                Pose::Spatial {
                    translation: t + s * (et - t),
                    rotation: rot,
                }
            }
            _ => unreachable!("mixed-variant path rejected at construction"),
        }
    }
}

/// Build the linear/geodesic path from `a` to `b`.
///
/// Antipodal spatial rotations take the arc through the relative quaternion
/// with nonnegative scalar part (sign fixed by the first nonzero component
/// when the scalar part is exactly zero).
pub fn interpolate_pose_path(a: &Pose, b: &Pose) -> PosePath {
    let translation_len = a.translation_distance(b);
    match (a, b) {
        (Pose::Planar { theta, .. }, Pose::Planar { theta: bt, .. }) => PosePath {
            start: a.clone(),
            end: b.clone(),
            rot_delta: normalize_angle(bt - theta),
            axis: None,
            translation_len,
        },
        (Pose::Spatial { rotation: r, .. }, Pose::Spatial { rotation: br, .. }) => {
            let mut rel = r.inverse() * br;
            let coords = [rel.w, rel.i, rel.j, rel.k];
            let canonical_sign = coords
                .iter()
                .find(|c| c.abs() > 0.0)
                .map_or(1.0, |c| c.signum());
            if canonical_sign < 0.0 {
                rel = UnitQuaternion::from_quaternion(-rel.into_inner());
            }
            let (axis, angle) = match rel.axis_angle() {
                Some((axis, angle)) => (Some(axis), angle),
                None => (None, 0.0),
            };
            PosePath {
                start: a.clone(),
                end: b.clone(),
                rot_delta: angle,
                axis,
                translation_len,
            }
        }
        _ => panic!("cannot interpolate between planar and spatial poses"),
    }
}

/// Sample the path from start to end inclusive so that consecutive samples
/// are within `step` under the weighted metric. Endpoints are returned
/// bit-exact; a zero-length path yields `[start, end]`.
pub fn discretize_path(path: &PosePath, step: f64, w_rot: f64) -> Vec<Pose> {
    assert!(step > 0.0, "discretization step must be positive");
    let len = path.metric_length(w_rot);
    let n = ((len / step).ceil() as usize).max(1);
    let mut out = Vec::with_capacity(n + 1);
    out.push(path.start.clone());
    for i in 1..n {
        out.push(path.eval(i as f64 / n as f64));
    }
    out.push(path.end.clone());
    out
}
