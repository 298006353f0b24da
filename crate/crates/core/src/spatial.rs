//! Rigid transforms, wrenches and the frame tree.
//!
//! A [`Transform`] maps coordinates expressed in one frame into another:
//! `x' = R x + p`. Wrenches are ordered force-then-torque, with the torque
//! taken about the origin of the frame they are expressed in.

use std::fmt;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const WORLD: &str = "world";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("unknown frame `{0}`")]
    UnknownFrame(FrameId),
    #[error("frame `{0}` is already registered")]
    DuplicateFrame(FrameId),
    #[error("frame mismatch: expected `{expected}`, got `{found}`")]
    FrameMismatch { expected: FrameId, found: FrameId },
}

/// Name of a coordinate frame registered in a [`FrameTree`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameId(String);

impl FrameId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for FrameId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for FrameId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl From<&FrameId> for FrameId {
    fn from(f: &FrameId) -> Self {
        f.clone()
    }
}

/// Proper rigid transform. Serialized as a row-major rotation and a translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "TransformRepr", into = "TransformRepr")]
pub struct Transform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

#[derive(Serialize, Deserialize)]
struct TransformRepr {
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl From<TransformRepr> for Transform {
    fn from(r: TransformRepr) -> Self {
        let m = r.rotation;
        Self {
            rotation: Matrix3::new(
                m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
            ),
            translation: Vector3::from(r.translation),
        }
    }
}

impl From<Transform> for TransformRepr {
    fn from(t: Transform) -> Self {
        let m = t.rotation;
        Self {
            rotation: [
                [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
            ],
            translation: t.translation.into(),
        }
    }
}

impl Default for Transform {
    fn default() -> Self {
        Self::identity()
    }
}

impl Transform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Matrix3::identity(), Vector3::new(x, y, z))
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Self::new(rotation, Vector3::zeros())
    }

    pub fn rot_x(angle: f64) -> Self {
        Self::from_rotation(*Rotation3::from_axis_angle(&Vector3::x_axis(), angle).matrix())
    }

    pub fn rot_y(angle: f64) -> Self {
        Self::from_rotation(*Rotation3::from_axis_angle(&Vector3::y_axis(), angle).matrix())
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_rotation(*Rotation3::from_axis_angle(&Vector3::z_axis(), angle).matrix())
    }

    /// Rotation by `|v|` radians about `v`; identity for a zero vector.
    pub fn from_rotation_vector(v: &Vector3<f64>) -> Self {
        Self::from_rotation(*Rotation3::new(*v).matrix())
    }

    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        match Unit::try_new(*axis, 1e-12) {
            Some(axis) => Self::from_rotation(*Rotation3::from_axis_angle(&axis, angle).matrix()),
            None => Self::identity(),
        }
    }

    pub fn with_translation(mut self, x: f64, y: f64, z: f64) -> Self {
        self.translation = Vector3::new(x, y, z);
        self
    }

    /// `self ∘ other`: points go through `other` first, then `self`.
    pub fn compose(&self, other: &Transform) -> Transform {
        Transform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> Transform {
        let rt = self.rotation.transpose();
        Transform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    /// Orthonormal with determinant +1 within `tol`.
    pub fn is_proper(&self, tol: f64) -> bool {
        let err = self.rotation.transpose() * self.rotation - Matrix3::identity();
        err.iter().all(|e| e.abs() <= tol)
            && (self.rotation.determinant() - 1.0).abs() <= tol
            && self.translation.iter().all(|t| t.is_finite())
    }

    /// Rotation vector (axis times angle) of the rotation part.
    pub fn rotation_vector(&self) -> Vector3<f64> {
        let r = &self.rotation;
        // atan2 keeps small angles accurate; acos of the trace does not
        let v = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]) * 0.5;
        let s = v.norm();
        let c = (r.trace() - 1.0) * 0.5;
        let angle = s.atan2(c);
        if angle < 1e-12 {
            v
        } else if std::f64::consts::PI - angle < 1e-6 {
            Rotation3::from_matrix_unchecked(*r).scaled_axis()
        } else {
            v * (angle / s)
        }
    }

    pub fn approx_eq(&self, other: &Transform, tol: f64) -> bool {
        (self.rotation - other.rotation).iter().all(|e| e.abs() <= tol)
            && (self.translation - other.translation)
                .iter()
                .all(|e| e.abs() <= tol)
    }
}

impl std::ops::Mul for Transform {
    type Output = Transform;

    fn mul(self, rhs: Transform) -> Transform {
        self.compose(&rhs)
    }
}

pub fn compose(a: &Transform, b: &Transform) -> Transform {
    a.compose(b)
}

pub fn invert(t: &Transform) -> Transform {
    t.inverse()
}

/// A 6D force/torque pair expressed in a named frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    #[serde(with = "vec3")]
    pub force: Vector3<f64>,
    #[serde(with = "vec3")]
    pub torque: Vector3<f64>,
    pub frame: FrameId,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>, frame: impl Into<FrameId>) -> Self {
        Self {
            force,
            torque,
            frame: frame.into(),
        }
    }

    /// From `[f_x, f_y, f_z, t_x, t_y, t_z]`.
    pub fn from_array(c: [f64; 6], frame: impl Into<FrameId>) -> Self {
        Self::new(
            Vector3::new(c[0], c[1], c[2]),
            Vector3::new(c[3], c[4], c[5]),
            frame,
        )
    }

    pub fn zero(frame: impl Into<FrameId>) -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros(), frame)
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.force.x,
            self.force.y,
            self.force.z,
            self.torque.x,
            self.torque.y,
            self.torque.z,
        ]
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::from(self.to_array())
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.to_array().iter().all(|c| *c == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Wrench {
        Wrench::new(self.force * s, self.torque * s, self.frame.clone())
    }

    /// Component-wise sum; both wrenches must be in the same frame.
    pub fn try_add(&self, other: &Wrench) -> Result<Wrench, SpatialError> {
        if self.frame != other.frame {
            return Err(SpatialError::FrameMismatch {
                expected: self.frame.clone(),
                found: other.frame.clone(),
            });
        }
        Ok(Wrench::new(
            self.force + other.force,
            self.torque + other.torque,
            self.frame.clone(),
        ))
    }

    /// Re-express this wrench in `target`, where `t` maps coordinates of the
    /// wrench's frame into `target` coordinates.
    pub fn transformed(&self, t: &Transform, target: impl Into<FrameId>) -> Wrench {
        let force = t.rotation * self.force;
        let torque = t.rotation * self.torque + t.translation.cross(&force);
        Wrench::new(force, torque, target)
    }
}

/// See [`Wrench::transformed`].
pub fn transform_wrench(w: &Wrench, t: &Transform, target: impl Into<FrameId>) -> Wrench {
    w.transformed(t, target)
}

mod vec3 {
    use nalgebra::Vector3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector3<f64>, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector3<f64>, D::Error> {
        let a = <[f64; 3]>::deserialize(d)?;
        Ok(Vector3::from(a))
    }
}

#[derive(Debug, Clone)]
struct FrameNode {
    parent: FrameId,
    parent_from_frame: Transform,
}

/// Tree of named frames rooted at [`WORLD`].
#[derive(Debug, Clone, Default)]
pub struct FrameTree {
    nodes: Vec<(FrameId, FrameNode)>,
}

impl FrameTree {
    pub fn new() -> Self {
        Self::default()
    }

    fn node(&self, id: &FrameId) -> Option<&FrameNode> {
        self.nodes.iter().find(|(k, _)| k == id).map(|(_, n)| n)
    }

    pub fn contains(&self, id: &FrameId) -> bool {
        id.as_str() == WORLD || self.node(id).is_some()
    }

    /// Register `name` with its pose relative to `parent`.
    pub fn add(
        &mut self,
        name: impl Into<FrameId>,
        parent: impl Into<FrameId>,
        parent_from_frame: Transform,
    ) -> Result<(), SpatialError> {
        let name = name.into();
        let parent = parent.into();
        if self.contains(&name) {
            return Err(SpatialError::DuplicateFrame(name));
        }
        if !self.contains(&parent) {
            return Err(SpatialError::UnknownFrame(parent));
        }
        self.nodes.push((
            name,
            FrameNode {
                parent,
                parent_from_frame,
            },
        ));
        Ok(())
    }

    /// Pose of `id` in the world frame.
    pub fn world_pose(&self, id: &FrameId) -> Result<Transform, SpatialError> {
        let mut pose = Transform::identity();
        let mut cur = id.clone();
        while cur.as_str() != WORLD {
            let node = self
                .node(&cur)
                .ok_or_else(|| SpatialError::UnknownFrame(cur.clone()))?;
            pose = node.parent_from_frame.compose(&pose);
            cur = node.parent.clone();
        }
        Ok(pose)
    }

    /// Transform mapping `from` coordinates into `to` coordinates.
    pub fn transform(&self, from: &FrameId, to: &FrameId) -> Result<Transform, SpatialError> {
        let w_from = self.world_pose(from)?;
        let w_to = self.world_pose(to)?;
        Ok(w_to.inverse().compose(&w_from))
    }

    /// Re-express `w` in frame `to`.
    pub fn express(&self, w: &Wrench, to: &FrameId) -> Result<Wrench, SpatialError> {
        let t = self.transform(&w.frame, to)?;
        Ok(w.transformed(&t, to))
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    /// Twist at the frame origin; only used as the power-pairing oracle.
    fn transform_twist(
        t: &Transform,
        v: &Vector3<f64>,
        w: &Vector3<f64>,
    ) -> (Vector3<f64>, Vector3<f64>) {
        let w2 = t.rotation * w;
        let v2 = t.rotation * v + t.translation.cross(&w2);
        (v2, w2)
    }

    fn arb_transform() -> impl Strategy<Value = Transform> {
        (
            prop::array::uniform3(-3.0f64..3.0),
            prop::array::uniform3(-2.0f64..2.0),
        )
            .prop_map(|(rv, p)| {
                Transform::from_rotation_vector(&Vector3::from(rv)).with_translation(p[0], p[1], p[2])
            })
    }

    fn arb_wrench() -> impl Strategy<Value = Wrench> {
        prop::array::uniform6(-50.0f64..50.0).prop_map(|c| Wrench::from_array(c, "a"))
    }

    #[test]
    fn compose_examples() {
        let t = Transform::rot_z(FRAC_PI_2).with_translation(1.0, 0.0, 0.0);
        assert!(Transform::identity().compose(&t).approx_eq(&t, 1e-12));
        assert!(t.compose(&t.inverse()).approx_eq(&Transform::identity(), 1e-9));

        let c = t.compose(&Transform::from_translation(0.0, 1.0, 0.0));
        assert!(c.approx_eq(&Transform::rot_z(FRAC_PI_2), 1e-12));
        assert_abs_diff_eq!(c.translation.norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn invert_examples() {
        assert!(Transform::identity()
            .inverse()
            .approx_eq(&Transform::identity(), 0.0));
        assert!(Transform::from_translation(1.0, 2.0, 3.0)
            .inverse()
            .approx_eq(&Transform::from_translation(-1.0, -2.0, -3.0), 1e-15));
        assert!(Transform::rot_z(FRAC_PI_2)
            .inverse()
            .approx_eq(&Transform::rot_z(-FRAC_PI_2), 1e-15));
    }

    #[test]
    fn wrench_transform_examples() {
        let w = Wrench::from_array([1.0, -2.0, 3.0, 0.5, 0.1, -0.2], "a");
        assert_eq!(w.transformed(&Transform::identity(), "a"), w);

        let push = Wrench::from_array([0.0, 0.0, -10.0, 0.0, 0.0, 0.0], "a");
        let moved = push.transformed(&Transform::from_translation(0.1, 0.0, 0.0), "b");
        assert_abs_diff_eq!(moved.force, Vector3::new(0.0, 0.0, -10.0), epsilon = 1e-12);
        assert_abs_diff_eq!(moved.torque, Vector3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
        assert_eq!(moved.frame.as_str(), "b");

        let couple = Wrench::from_array([0.0, 0.0, 0.0, 0.0, 0.0, 5.0], "a");
        let moved = couple.transformed(&Transform::from_translation(0.3, -1.0, 2.0), "b");
        assert_abs_diff_eq!(moved.torque, Vector3::new(0.0, 0.0, 5.0), epsilon = 1e-12);
    }

    #[test]
    fn frame_tree_lookup() {
        let mut tree = FrameTree::new();
        tree.add("table", WORLD, Transform::from_translation(1.0, 0.0, 0.5))
            .unwrap();
        tree.add("bottle", "table", Transform::rot_z(FRAC_PI_2))
            .unwrap();
        tree.add("lid", "bottle", Transform::from_translation(0.0, 0.0, 0.2))
            .unwrap();
        let lid = tree.world_pose(&"lid".into()).unwrap();
        assert_abs_diff_eq!(lid.translation, Vector3::new(1.0, 0.0, 0.7), epsilon = 1e-12);

        let t = tree.transform(&"lid".into(), &"table".into()).unwrap();
        assert_abs_diff_eq!(
            t.apply_point(&Vector3::zeros()),
            Vector3::new(0.0, 0.0, 0.2),
            epsilon = 1e-12
        );
        assert_eq!(
            tree.transform(&"lid".into(), &"nowhere".into()),
            Err(SpatialError::UnknownFrame("nowhere".into()))
        );
        assert!(matches!(
            tree.add("lid", WORLD, Transform::identity()),
            Err(SpatialError::DuplicateFrame(_))
        ));
    }

    #[test]
    fn mismatched_frames_do_not_add() {
        let a = Wrench::zero("a");
        assert!(a.try_add(&Wrench::zero("b")).is_err());
    }

    proptest! {
        #[test]
        fn transforms_stay_proper(a in arb_transform(), b in arb_transform()) {
            prop_assert!(a.compose(&b).is_proper(1e-9));
            prop_assert!(a.compose(&a.inverse()).approx_eq(&Transform::identity(), 1e-9));
        }

        #[test]
        fn power_is_frame_invariant(
            w in arb_wrench(),
            t in arb_transform(),
            v in prop::array::uniform3(-5.0f64..5.0),
            om in prop::array::uniform3(-5.0f64..5.0),
        ) {
            let (v, om) = (Vector3::from(v), Vector3::from(om));
            let p0 = w.force.dot(&v) + w.torque.dot(&om);
            let w2 = w.transformed(&t, "b");
            let (v2, om2) = transform_twist(&t, &v, &om);
            let p1 = w2.force.dot(&v2) + w2.torque.dot(&om2);
            prop_assert!((p0 - p1).abs() <= 1e-9 * (1.0 + p0.abs()));
        }

        #[test]
        fn transform_round_trip(w in arb_wrench(), t in arb_transform()) {
            let back = w.transformed(&t, "b").transformed(&t.inverse(), "a");
            for (x, y) in back.to_array().iter().zip(w.to_array()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }

        #[test]
        fn transform_is_linear(
            w1 in arb_wrench(),
            w2 in arb_wrench(),
            t in arb_transform(),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let mix = w1.scaled(a).try_add(&w2.scaled(b)).unwrap();
            let lhs = mix.transformed(&t, "b");
            let rhs = w1.transformed(&t, "b").scaled(a)
                .try_add(&w2.transformed(&t, "b").scaled(b)).unwrap();
            for (x, y) in lhs.to_array().iter().zip(rhs.to_array()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }
}
