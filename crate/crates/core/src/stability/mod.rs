//! Wrench-space stability of joints and of forceful kinematic chains.
//!
//! Every joint model exposes the set of wrenches it can resist. A chain is
//! stable under an exerted wrench when each of its joints, in turn, is
//! stable under that wrench re-expressed in the joint's test frame.

mod contact;

use std::sync::Arc;

use nalgebra::Vector6;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contact::{
    beam_support_forces, beam_table_patch, friction_cone_generators, friction_polytope_scale,
    in_convex_cone, limit_surface_form, limit_surface_stable, polygon_support_margin,
    CircularPatchJoint, PolygonPatchJoint, GRAVITY, TORSION_RADIUS_RATIO,
};

use crate::robot::{torque_stable, Config, SerialArm};
use crate::spatial::{FrameId, FrameTree, SpatialError, Transform, Wrench};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error("invalid joint: {0}")]
    InvalidJoint(String),
    #[error("load centered at {center} with extent {extent} overhangs a support of a beam of length {beam_length}")]
    UnsupportedLoad {
        center: f64,
        extent: f64,
        beam_length: f64,
    },
    #[error(transparent)]
    Robot(#[from] crate::robot::RobotError),
}

/// Verdict of a stability test. `margin > 0` exactly when `stable`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub margin: f64,
    pub failing_joint: Option<usize>,
}

impl StabilityVerdict {
    pub fn from_margin(margin: f64) -> Self {
        Self {
            stable: margin > 0.0,
            margin,
            failing_joint: None,
        }
    }

    fn min(self, other: StabilityVerdict) -> StabilityVerdict {
        if other.margin < self.margin || other.margin.is_nan() {
            other
        } else {
            self
        }
    }
}

/// Serial arm held at a fixed configuration. Its test frame sits at the
/// end-effector point with axes aligned to the arm base.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmJoint {
    pub arm: Arc<SerialArm>,
    pub q: Config,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JointModel {
    CircularPatch(CircularPatchJoint),
    PolygonPatch(PolygonPatchJoint),
    Arm(ArmJoint),
    Rigid,
}

impl JointModel {
    pub fn kind(&self) -> &'static str {
        match self {
            JointModel::CircularPatch(_) => "circular-patch",
            JointModel::PolygonPatch(_) => "polygon-patch",
            JointModel::Arm(_) => "arm",
            JointModel::Rigid => "rigid",
        }
    }
}

/// A joint model together with the frame its test is expressed in.
#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub frame: FrameId,
    pub model: JointModel,
}

impl Joint {
    pub fn new(name: impl Into<String>, frame: impl Into<FrameId>, model: JointModel) -> Self {
        Self {
            name: name.into(),
            frame: frame.into(),
            model,
        }
    }
}

/// Stability of a single joint under `w`, which must be expressed in the
/// joint's test frame.
///
/// Circular patches test the planar friction wrench `[f_x, f_y, m_z]`
/// against the limit surface and reject any tension along the normal.
/// Polygon patches test the same subspace against their bounded friction
/// polytope (margin `1 - 1/s*` for boundary scale `s*`) and require the
/// pressed load and center of pressure to stay supported. Arms compare
/// joint torques to their limits. Rigid joints always hold.
pub fn joint_stable(joint: &Joint, w: &Wrench) -> Result<StabilityVerdict, StabilityError> {
    if w.frame != joint.frame {
        return Err(SpatialError::FrameMismatch {
            expected: joint.frame.clone(),
            found: w.frame.clone(),
        }
        .into());
    }
    let v = w.to_vector();
    Ok(match &joint.model {
        JointModel::Rigid => StabilityVerdict::from_margin(1.0),
        JointModel::CircularPatch(patch) => {
            let friction = limit_surface_stable([v[0], v[1], v[5]], patch);
            if v[2] > 0.0 {
                let separation = if patch.normal_force > 0.0 {
                    -v[2] / patch.normal_force
                } else {
                    f64::NEG_INFINITY
                };
                friction.min(StabilityVerdict::from_margin(separation))
            } else {
                friction
            }
        }
        JointModel::PolygonPatch(patch) => polygon_patch_verdict(patch, &v),
        JointModel::Arm(arm) => torque_stable(&arm.arm, &arm.q, w)?,
    })
}

fn polygon_patch_verdict(patch: &PolygonPatchJoint, v: &Vector6<f64>) -> StabilityVerdict {
    let scale = friction_polytope_scale(patch, [v[0], v[1], v[5]]);
    let friction = if scale.is_infinite() {
        1.0
    } else if scale <= 0.0 {
        f64::NEG_INFINITY
    } else {
        1.0 - 1.0 / scale
    };
    let support = polygon_support_margin(patch, v);
    StabilityVerdict::from_margin(friction.min(support))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainLink {
    pub joint: Joint,
    /// Maps application-frame coordinates into the joint's test frame.
    pub transform: Transform,
    /// Extra load on this joint, expressed in its test frame.
    pub gravity: Option<Wrench>,
}

/// Joints through which an exerted wrench is transmitted, ordered from the
/// application frame to ground.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcefulKinematicChain {
    pub application_frame: FrameId,
    pub links: Vec<ChainLink>,
}

impl ForcefulKinematicChain {
    pub fn new(application_frame: impl Into<FrameId>) -> Self {
        Self {
            application_frame: application_frame.into(),
            links: Vec::new(),
        }
    }

    pub fn with_joint(mut self, joint: Joint, transform: Transform) -> Self {
        self.links.push(ChainLink {
            joint,
            transform,
            gravity: None,
        });
        self
    }

    pub fn with_loaded_joint(mut self, joint: Joint, transform: Transform, gravity: Wrench) -> Self {
        self.links.push(ChainLink {
            joint,
            transform,
            gravity: Some(gravity),
        });
        self
    }

    /// Build a chain whose joint transforms are looked up in `tree`.
    pub fn from_tree(
        tree: &FrameTree,
        application_frame: impl Into<FrameId>,
        joints: Vec<Joint>,
    ) -> Result<Self, StabilityError> {
        let application_frame = application_frame.into();
        let mut chain = Self::new(application_frame.clone());
        for joint in joints {
            let t = tree.transform(&application_frame, &joint.frame)?;
            chain = chain.with_joint(joint, t);
        }
        Ok(chain)
    }

    /// The same chain taking wrenches expressed in `frame`, where
    /// `frame_from_app` maps the current application frame into `frame`.
    pub fn reexpressed(&self, frame: impl Into<FrameId>, frame_from_app: &Transform) -> Self {
        let app_from_frame = frame_from_app.inverse();
        Self {
            application_frame: frame.into(),
            links: self
                .links
                .iter()
                .map(|l| ChainLink {
                    joint: l.joint.clone(),
                    transform: l.transform.compose(&app_from_frame),
                    gravity: l.gravity.clone(),
                })
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }
}

/// Propagate `w_applied` through every joint of the chain. Stable iff all
/// joints are; the margin is the minimum joint margin and `failing_joint`
/// the first joint whose margin is not positive.
pub fn chain_stable(
    chain: &ForcefulKinematicChain,
    w_applied: &Wrench,
) -> Result<StabilityVerdict, StabilityError> {
    if w_applied.frame != chain.application_frame {
        return Err(SpatialError::FrameMismatch {
            expected: chain.application_frame.clone(),
            found: w_applied.frame.clone(),
        }
        .into());
    }
    let mut margin = 1.0f64;
    let mut failing = None;
    for (i, link) in chain.links.iter().enumerate() {
        let mut w = w_applied.transformed(&link.transform, link.joint.frame.clone());
        if let Some(g) = &link.gravity {
            w = w.try_add(g)?;
        }
        let v = joint_stable(&link.joint, &w)?;
        if !(v.margin > 0.0) && failing.is_none() {
            failing = Some(i);
        }
        margin = margin.min(v.margin);
    }
    Ok(StabilityVerdict {
        stable: failing.is_none(),
        margin,
        failing_joint: failing,
    })
}
