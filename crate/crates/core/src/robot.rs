//! Serial revolute manipulators: forward kinematics, the geometric Jacobian,
//! joint-torque limits, damped-least-squares IK and the Cartesian impedance
//! offset used to exert a wrench.

use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spatial::{FrameId, Transform, Wrench};
use crate::stability::StabilityVerdict;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobotError {
    #[error("configuration has {got} joints, arm has {expected}")]
    ConfigLength { expected: usize, got: usize },
    #[error("invalid arm description: {0}")]
    InvalidArm(String),
    #[error("inverse kinematics did not converge (pose error {error:.3e} after {iterations} iterations)")]
    IkFailed { error: f64, iterations: usize },
    #[error("stiffness must be positive in every direction")]
    NonPositiveStiffness,
}

/// Joint angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Config(pub Vec<f64>);

impl Config {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Config {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// One revolute joint: the fixed transform from the previous joint frame
/// (or the base) to this joint's frame at zero angle, and its rotation axis
/// in that frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevoluteJoint {
    pub origin: Transform,
    pub axis: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SerialArm {
    pub joints: Vec<RevoluteJoint>,
    /// From the last joint frame to the end-effector frame.
    pub tool: Transform,
    pub torque_limits: Vec<f64>,
    pub position_limits: Vec<[f64; 2]>,
    #[serde(default = "default_base_frame")]
    pub base_frame: FrameId,
}

fn default_base_frame() -> FrameId {
    FrameId::new("world")
}

impl SerialArm {
    pub fn new(
        joints: Vec<RevoluteJoint>,
        tool: Transform,
        torque_limits: Vec<f64>,
        position_limits: Vec<[f64; 2]>,
    ) -> Result<Self, RobotError> {
        let arm = Self {
            joints,
            tool,
            torque_limits,
            position_limits,
            base_frame: default_base_frame(),
        };
        arm.validate()?;
        Ok(arm)
    }

    pub fn validate(&self) -> Result<(), RobotError> {
        let n = self.joints.len();
        if self.torque_limits.len() != n || self.position_limits.len() != n {
            return Err(RobotError::InvalidArm(format!(
                "{n} joints but {} torque limits and {} position limits",
                self.torque_limits.len(),
                self.position_limits.len()
            )));
        }
        if self.torque_limits.iter().any(|t| !(*t > 0.0)) {
            return Err(RobotError::InvalidArm(
                "torque limits must be strictly positive".into(),
            ));
        }
        if self.position_limits.iter().any(|[lo, hi]| !(lo <= hi)) {
            return Err(RobotError::InvalidArm(
                "position limits must satisfy min <= max".into(),
            ));
        }
        for j in &self.joints {
            let a = Vector3::from(j.axis);
            if (a.norm() - 1.0).abs() > 1e-9 {
                return Err(RobotError::InvalidArm("joint axes must be unit".into()));
            }
            if !j.origin.is_proper(1e-9) {
                return Err(RobotError::InvalidArm(
                    "joint origins must be proper rigid transforms".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Seven revolute joints alternating vertical and horizontal axes:
    /// 0.3 m shoulder height, 0.4 m upper arm and forearm, 0.1 m wrist and
    /// 0.1 m tool flange. Torque limits 87 N·m for the four proximal joints
    /// and 12 N·m for the wrist.
    pub fn seven_dof() -> Self {
        let z = [0.0, 0.0, 1.0];
        let y = [0.0, 1.0, 0.0];
        let j = |h: f64, axis| RevoluteJoint {
            origin: Transform::from_translation(0.0, 0.0, h),
            axis,
        };
        Self {
            joints: vec![
                j(0.3, z),
                j(0.0, y),
                j(0.4, z),
                j(0.0, y),
                j(0.4, z),
                j(0.0, y),
                j(0.1, z),
            ],
            tool: Transform::from_translation(0.0, 0.0, 0.1),
            torque_limits: vec![87.0, 87.0, 87.0, 87.0, 12.0, 12.0, 12.0],
            position_limits: vec![
                [-2.9, 2.9],
                [-1.8, 1.8],
                [-2.9, 2.9],
                [-2.8, 2.8],
                [-2.9, 2.9],
                [-2.8, 2.8],
                [-2.9, 2.9],
            ],
            base_frame: default_base_frame(),
        }
    }

    /// A folded configuration of [`SerialArm::seven_dof`] with the tool
    /// pointing straight down about 0.55 m in front of the base.
    pub fn seven_dof_home() -> Config {
        Config(vec![0.0, 0.6, 0.0, 1.6, 0.0, std::f64::consts::PI - 2.2, 0.0])
    }

    /// Planar chain of `lengths` with all axes along `z`, links along `x`.
    pub fn planar(lengths: &[f64], torque_limits: Vec<f64>) -> Result<Self, RobotError> {
        let mut joints = Vec::with_capacity(lengths.len());
        let mut prev = 0.0;
        for l in lengths {
            joints.push(RevoluteJoint {
                origin: Transform::from_translation(prev, 0.0, 0.0),
                axis: [0.0, 0.0, 1.0],
            });
            prev = *l;
        }
        let n = lengths.len();
        Self::new(
            joints,
            Transform::from_translation(prev, 0.0, 0.0),
            torque_limits,
            vec![[-std::f64::consts::PI, std::f64::consts::PI]; n],
        )
    }

    pub fn within_limits(&self, q: &Config) -> bool {
        q.len() == self.dof()
            && q
                .0
                .iter()
                .zip(&self.position_limits)
                .all(|(v, [lo, hi])| *v >= *lo && *v <= *hi)
    }

    fn check_len(&self, q: &Config) -> Result<(), RobotError> {
        if q.len() != self.dof() {
            return Err(RobotError::ConfigLength {
                expected: self.dof(),
                got: q.len(),
            });
        }
        Ok(())
    }

    /// Joint frames (after rotation) followed by the end-effector pose.
    fn frames(&self, q: &Config) -> (Vec<Transform>, Transform) {
        let mut t = Transform::identity();
        let mut frames = Vec::with_capacity(self.dof());
        for (j, angle) in self.joints.iter().zip(&q.0) {
            t = t.compose(&j.origin);
            t = t.compose(&Transform::from_axis_angle(&Vector3::from(j.axis), *angle));
            frames.push(t);
        }
        (frames, t.compose(&self.tool))
    }
}

/// End-effector pose in the arm's base frame.
pub fn fk(arm: &SerialArm, q: &Config) -> Result<Transform, RobotError> {
    arm.check_len(q)?;
    Ok(arm.frames(q).1)
}

/// Geometric Jacobian (6×n) in the base frame: rows 0..3 give the linear
/// velocity of the end-effector point, rows 3..6 the angular velocity.
pub fn jacobian(arm: &SerialArm, q: &Config) -> Result<DMatrix<f64>, RobotError> {
    arm.check_len(q)?;
    let (frames, ee) = arm.frames(q);
    let p = ee.translation;
    let mut jac = DMatrix::zeros(6, arm.dof());
    for (i, (f, j)) in frames.iter().zip(&arm.joints).enumerate() {
        let z = f.rotation * Vector3::from(j.axis);
        let lin = z.cross(&(p - f.translation));
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
    }
    Ok(jac)
}

/// Joint torques `τ = Jᵀ w` for a wrench at the end-effector point with
/// base-aligned axes.
pub fn joint_torques(arm: &SerialArm, q: &Config, w_ext: &Wrench) -> Result<Vec<f64>, RobotError> {
    let jac = jacobian(arm, q)?;
    let w = DVector::from_column_slice(w_ext.to_vector().as_slice());
    Ok((jac.transpose() * w).iter().copied().collect())
}

/// Stable iff every `|τ_i|` is strictly below its limit; the margin is
/// `1 - max_i |τ_i| / τ_lim,i`.
pub fn torque_stable(
    arm: &SerialArm,
    q: &Config,
    w_ext: &Wrench,
) -> Result<StabilityVerdict, RobotError> {
    let tau = joint_torques(arm, q, w_ext)?;
    let mut worst = 0.0f64;
    let mut worst_joint = None;
    for (i, (t, lim)) in tau.iter().zip(&arm.torque_limits).enumerate() {
        let r = t.abs() / lim;
        if r > worst {
            worst = r;
            worst_joint = Some(i);
        }
    }
    let mut v = StabilityVerdict::from_margin(1.0 - worst);
    if !v.stable {
        v.failing_joint = worst_joint;
    }
    Ok(v)
}

/// `[position error; rotation vector error]` from `current` to `target`.
pub fn pose_error(current: &Transform, target: &Transform) -> Vector6<f64> {
    let dp = target.translation - current.translation;
    let dr = Transform::from_rotation(target.rotation * current.rotation.transpose())
        .rotation_vector();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub damping: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub max_step: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            damping: 1e-2,
            max_iterations: 200,
            tolerance: 1e-4,
            max_step: 0.4,
        }
    }
}

pub fn ik(arm: &SerialArm, target: &Transform, seed: &Config) -> Result<Config, RobotError> {
    ik_with(arm, target, seed, &IkOptions::default())
}

/// Damped least squares from `seed`, clamping every iterate to the position
/// limits. Succeeds when the combined position/rotation error drops below
/// `tolerance`.
pub fn ik_with(
    arm: &SerialArm,
    target: &Transform,
    seed: &Config,
    opts: &IkOptions,
) -> Result<Config, RobotError> {
    arm.check_len(seed)?;
    let n = arm.dof();
    let mut q = seed.clone();
    clamp(arm, &mut q);
    let lambda2 = opts.damping * opts.damping;
    let mut err_norm = f64::INFINITY;
    for _ in 0..=opts.max_iterations {
        let (_, ee) = arm.frames(&q);
        let e = pose_error(&ee, target);
        err_norm = e.norm();
        if err_norm < opts.tolerance {
            return Ok(q);
        }
        let jac = jacobian(arm, &q)?;
        let jjt = &jac * jac.transpose() + DMatrix::identity(6, 6) * lambda2;
        let Some(chol) = jjt.cholesky() else { break };
        let e = DVector::from_column_slice(e.as_slice());
        let mut dq = jac.transpose() * chol.solve(&e);
        let step = dq.amax();
        if step > opts.max_step {
            dq *= opts.max_step / step;
        }
        for i in 0..n {
            q.0[i] += dq[i];
        }
        clamp(arm, &mut q);
    }
    Err(RobotError::IkFailed {
        error: err_norm,
        iterations: opts.max_iterations,
    })
}

fn clamp(arm: &SerialArm, q: &mut Config) {
    for (v, [lo, hi]) in q.0.iter_mut().zip(&arm.position_limits) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Cartesian impedance set-point: critically damped stiffness and the pose
/// offset that makes the spring exert the desired wrench.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpedanceCommand {
    pub stiffness: [f64; 6],
    pub damping: [f64; 6],
    pub pose_offset: [f64; 6],
}

impl ImpedanceCommand {
    pub fn for_wrench(w: &Wrench, stiffness: [f64; 6]) -> Result<Self, RobotError> {
        let pose_offset = impedance_offset(w, &stiffness)?;
        Ok(Self {
            stiffness,
            damping: stiffness.map(|k| 2.0 * k.sqrt()),
            pose_offset,
        })
    }
}

/// Linear spring model: `offset_i = w_i / K_p,i` (metres for forces,
/// radians for torques).
pub fn impedance_offset(w: &Wrench, stiffness: &[f64; 6]) -> Result<[f64; 6], RobotError> {
    if stiffness.iter().any(|k| !(*k > 0.0)) {
        return Err(RobotError::NonPositiveStiffness);
    }
    let c = w.to_array();
    Ok(std::array::from_fn(|i| c[i] / stiffness[i]))
}
