//! Opening a childproof bottle: push the lid down while twisting it, with
//! the bottle held still by friction against a surface, by a second arm or
//! by a vise.
//!
//! Lid frame: origin at the center of the lid top, `z` up, yaw of the
//! bottle. The operation wrench is `(0, 0, -(f_z + f), 0, 0, t_z)` in that
//! frame, where `f` is an extra downward push chosen by the planner.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::scene::{BottleScene, Region, StartSurface};
use super::{
    arm_link, arm_values, chain_eval, combine, ee_down, find_arm, gravity_wrench,
    hanging_grasp_chain, jaw_patch, manipulation, reaches, solve_ik, yaw_sample, ArmPlacement,
    CostModel, DomainError, ForcefulOperation, GraspCostFn, TwistMethod, Val, INFEASIBLE,
    IK_RESTARTS,
};
use crate::planner::{atom, params, ActionEval, ActionSchema, Atom, Param, Plan, Problem, Stream, Value};
use crate::robot::Config;
use crate::spatial::{Transform, Wrench};
use crate::stability::{
    chain_stable, CircularPatchJoint, ForcefulKinematicChain, Joint, JointModel,
    PolygonPatchJoint, StabilityVerdict, GRAVITY,
};

/// Magnitudes of the twisting operation and the planner's options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BottleOperation {
    /// Downward push the operation needs regardless of method, N.
    pub down_force: f64,
    /// Unscrewing torque about the lid axis, N·m.
    pub torque: f64,
    /// How far one twist turns the lid, rad.
    pub twist_angle: f64,
    /// Number of extra-push values the planner may choose from, spread
    /// evenly over `[0, max_down_force]`.
    pub force_levels: usize,
    /// Set by the caller; scenario files choose it outside this section.
    #[serde(skip)]
    pub cost: CostModel,
    /// Strategy codes switched off (see [`super::DISABLE_CODES`]).
    pub disable: BTreeSet<String>,
}

impl Default for BottleOperation {
    fn default() -> Self {
        Self {
            down_force: 15.0,
            torque: 0.2,
            twist_angle: 1.0,
            force_levels: 5,
            cost: CostModel::Feasibility,
            disable: BTreeSet::new(),
        }
    }
}

/// Friction left on the table when surface fixturing on it is switched off.
pub const SLIPPERY_TABLE_MU: f64 = 0.05;

/// How the bottle is held still while the lid turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Fixture {
    /// Friction between the bottle base and the table.
    SurfaceTable,
    /// Friction between the bottle base and the rubber mat.
    SurfaceMat,
    /// Another arm grasps the bottle.
    Robot,
    Vise,
}

impl Fixture {
    pub fn code(self) -> &'static str {
        match self {
            Fixture::SurfaceTable => "SF(T)",
            Fixture::SurfaceMat => "SF(M)",
            Fixture::Robot => "RF",
            Fixture::Vise => "VF",
        }
    }
}

/// A bottle scene with its invalidations applied, plus the operation.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleModel {
    pub scene: BottleScene,
    pub op: BottleOperation,
    pub methods: BTreeSet<TwistMethod>,
}

const LID: &str = "lid";
const BOTTLE: &str = "bottle";
const TOOL: &str = "tool";

impl BottleModel {
    /// Applies `op.disable`: `sft` makes the table slippery, `sfm` removes
    /// the mat, `vf` the vise, `rf` every arm but the first, and the method
    /// codes remove their twist actions.
    pub fn new(mut scene: BottleScene, op: BottleOperation) -> Result<Self, DomainError> {
        let off = |c: &str| op.disable.contains(c);
        if off("sft") {
            scene.table.mu = scene.table.mu.min(SLIPPERY_TABLE_MU);
        }
        if off("sfm") {
            scene.mat = None;
        }
        if off("vf") {
            scene.vise = None;
        }
        if off("rf") {
            scene.arms.truncate(1);
        }
        let mut methods: BTreeSet<TwistMethod> = TwistMethod::ALL
            .into_iter()
            .filter(|m| !off(&m.code().to_ascii_lowercase()))
            .collect();
        if scene.tool.is_none() {
            methods.remove(&TwistMethod::Tool);
        }
        let model = Self { scene, op, methods };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), DomainError> {
        let s = &self.scene;
        if s.arms.is_empty() {
            return Err(DomainError::Missing("an arm".into()));
        }
        let mut names = BTreeSet::new();
        for a in &s.arms {
            a.model.validate()?;
            if a.home.len() != a.model.dof() {
                return Err(DomainError::Invalid(format!("home configuration of {} has the wrong length", a.name)));
            }
            if !names.insert(a.name.as_str()) || [BOTTLE, LID, TOOL].contains(&a.name.as_str()) {
                return Err(DomainError::Invalid(format!("arm name {} is not unique", a.name)));
            }
        }
        if s.start == StartSurface::Mat && s.mat.is_none() {
            return Err(DomainError::Missing("the mat the bottle starts on".into()));
        }
        let b = &s.bottle;
        let positive = [
            ("bottle.mass", b.mass),
            ("bottle.radius", b.radius),
            ("bottle.height", b.height),
            ("bottle.lid_radius", b.lid_radius),
            ("hand.grip_force", s.hand.grip_force),
            ("hand.mu", s.hand.mu),
            ("hand.palm_mu", s.hand.palm_mu),
            ("hand.palm_radius", s.hand.palm_radius),
            ("hand.finger_mu", s.hand.finger_mu),
            ("hand.pad_size", s.hand.pad_size),
            ("table.mu", s.table.mu),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DomainError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(m) = &s.mat {
            if !(m.mu > 0.0) {
                return Err(DomainError::Invalid("mat.mu must be positive".into()));
            }
        }
        if let Some(t) = &s.tool {
            if !(t.length > 0.0 && t.tip_radius > 0.0 && t.tip_mu > 0.0 && t.mass > 0.0) {
                return Err(DomainError::Invalid("tool dimensions, mass and friction must be positive".into()));
            }
        }
        if !(self.op.down_force >= 0.0 && self.op.torque.is_finite() && s.max_down_force >= 0.0) {
            return Err(DomainError::Invalid("operation magnitudes must be finite and non-negative".into()));
        }
        if self.op.force_levels == 0 {
            return Err(DomainError::Invalid("force_levels must be at least 1".into()));
        }
        if let CostModel::Robust { perturbation } = &self.op.cost {
            perturbation.validate()?;
        }
        Ok(())
    }

    pub fn operation(&self, extra: f64) -> ForcefulOperation {
        ForcefulOperation {
            wrench: self.wrench(extra),
            fixture_target: BOTTLE.into(),
        }
    }

    /// Operation wrench with `extra` newtons of additional push.
    pub fn wrench(&self, extra: f64) -> Wrench {
        Wrench::from_array(
            [0.0, 0.0, -(self.op.down_force + extra), 0.0, 0.0, self.op.torque],
            LID,
        )
    }

    pub fn force_grid(&self) -> Vec<f64> {
        let n = self.op.force_levels;
        if n == 1 {
            return vec![0.0];
        }
        (0..n)
            .map(|k| self.scene.max_down_force * k as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn twister(&self) -> &ArmPlacement {
        &self.scene.arms[0]
    }

    pub fn region(&self, name: &str) -> Option<Region> {
        match name {
            "table" => Some(self.scene.table),
            "mat" => self.scene.mat,
            _ => None,
        }
    }

    /// Bottle base pose at `(x, y)` on a surface of the given height.
    pub fn bottle_pose(&self, x: f64, y: f64, height: f64, yaw: f64) -> Transform {
        Transform::rot_z(yaw).with_translation(x, y, height)
    }

    pub fn start_pose(&self) -> Val {
        let s = &self.scene;
        let (region, h) = match s.start {
            StartSurface::Table => ("table", s.table.height),
            StartSurface::Mat => ("mat", s.mat.map_or(0.0, |m| m.height)),
        };
        let [x, y] = match (s.start, s.mat) {
            (StartSurface::Mat, Some(m)) => m.center,
            _ => s.bottle.position,
        };
        Val::Pose {
            object: BOTTLE.into(),
            region: region.into(),
            pose: self.bottle_pose(x, y, h, 0.0),
        }
    }

    pub fn lid_world(&self, bottle: &Transform) -> Transform {
        bottle.compose(&Transform::from_translation(0.0, 0.0, self.scene.bottle.height))
    }

    fn yaw_of(t: &Transform) -> f64 {
        t.rotation[(1, 0)].atan2(t.rotation[(0, 0)])
    }

    /// End-effector pose that starts a twist with `method` at contact yaw
    /// `yaw` (relative to the lid).
    pub fn twist_target(&self, method: TwistMethod, yaw: f64, bottle: &Transform) -> Transform {
        let lid = self.lid_world(bottle);
        let lift = match (method, &self.scene.tool) {
            (TwistMethod::Tool, Some(t)) => t.length,
            _ => 0.0,
        };
        ee_down(lid.translation + Vector3::new(0.0, 0.0, lift), Self::yaw_of(&lid) + yaw)
    }

    /// End-effector pose for lifting the loosened cap off.
    pub fn cap_target(&self, bottle: &Transform) -> Transform {
        let lid = self.lid_world(bottle);
        ee_down(lid.translation, Self::yaw_of(&lid) + PI / 4.0)
    }

    /// Side grasp of the bottle approaching along `theta` in the bottle frame.
    pub fn bottle_grasp(&self, theta: f64) -> Transform {
        let d = Vector3::new(theta.cos(), theta.sin(), 0.0);
        let x = Vector3::new(0.0, 0.0, -1.0);
        let y = d.cross(&x);
        Transform::new(
            Matrix3::from_columns(&[x, y, d]),
            Vector3::new(0.0, 0.0, self.scene.bottle.grasp_height),
        )
    }

    /// The tool's only grasp: jaws around the top of the handle, tool frame
    /// at the tip with `z` along the handle.
    pub fn tool_grasp(&self) -> Option<Transform> {
        let t = self.scene.tool.as_ref()?;
        Some(Transform::new(Transform::rot_x(PI).rotation, Vector3::new(0.0, 0.0, t.length)))
    }

    fn push(&self, extra: f64) -> f64 {
        self.op.down_force + extra
    }

    /// The hand-side joints of a twist, with transforms from the lid frame.
    fn hand_joints(&self, method: TwistMethod, yaw: f64, extra: f64) -> Result<Vec<(Joint, Transform)>, DomainError> {
        let s = &self.scene;
        let hand = &s.hand;
        let contact = Transform::rot_z(-yaw);
        let push = self.push(extra);
        Ok(match method {
            TwistMethod::Grasp => vec![(
                Joint::new(
                    "hand-lid",
                    "hand-lid",
                    JointModel::CircularPatch(CircularPatchJoint::new(hand.mu, s.bottle.lid_radius, hand.grip_force)?),
                ),
                contact,
            )],
            TwistMethod::Palm => vec![(
                Joint::new(
                    "palm-lid",
                    "palm-lid",
                    JointModel::CircularPatch(CircularPatchJoint::new(
                        hand.palm_mu,
                        hand.palm_radius.min(s.bottle.lid_radius),
                        push,
                    )?),
                ),
                contact,
            )],
            TwistMethod::Finger => vec![(
                Joint::new("fingers-lid", "fingers-lid", JointModel::PolygonPatch(self.fingertip_patch(push)?)),
                contact,
            )],
            TwistMethod::Tool => {
                let t = s.tool.as_ref().ok_or_else(|| DomainError::Missing("the tool".into()))?;
                // the handle end bears on the palm and carries the push; the
                // jaws around the handle resist the torsion
                let handle = Transform::new(contact.rotation, Vector3::new(0.0, 0.0, -t.length));
                vec![
                    (
                        Joint::new("hand-tool", "hand-tool", JointModel::PolygonPatch(jaw_patch(hand, hand.mu)?)),
                        handle,
                    ),
                    (
                        Joint::new(
                            "tool-lid",
                            "tool-lid",
                            JointModel::CircularPatch(CircularPatchJoint::new(t.tip_mu, t.tip_radius, push)?),
                        ),
                        contact,
                    ),
                ]
            }
        })
    }

    /// Two square fingertip pads on the lid top, on either side of the axis,
    /// sharing the push equally between their eight corners.
    pub fn fingertip_patch(&self, push: f64) -> Result<PolygonPatchJoint, DomainError> {
        let hand = &self.scene.hand;
        let (c, h) = (hand.finger_offset, hand.pad_size / 2.0);
        let mut corners = Vec::new();
        for side in [-1.0, 1.0] {
            for (dx, dy) in [(-h, -h), (-h, h), (h, -h), (h, h)] {
                corners.push(Vector3::new(side * c + dx, dy, 0.0));
            }
        }
        let n = corners.len() as f64;
        Ok(PolygonPatchJoint::new(hand.finger_mu, corners, vec![push / n; 8])?)
    }

    /// The hand-side contacts alone, without the arm behind them.
    pub fn contact_chain(&self, method: TwistMethod, yaw: f64, extra: f64) -> Result<ForcefulKinematicChain, DomainError> {
        let mut chain = ForcefulKinematicChain::new(LID);
        for (j, t) in self.hand_joints(method, yaw, extra)? {
            chain = chain.with_joint(j, t);
        }
        Ok(chain)
    }

    pub fn contact_verdict(&self, method: TwistMethod, yaw: f64, extra: f64) -> Result<StabilityVerdict, DomainError> {
        Ok(chain_stable(&self.contact_chain(method, yaw, extra)?, &self.wrench(extra))?)
    }

    /// Twist chain from the lid through the hand (and tool) into the
    /// twisting arm at `q`.
    pub fn twist_chain(
        &self,
        method: TwistMethod,
        yaw: f64,
        bottle: &Transform,
        q: &Config,
        extra: f64,
    ) -> Result<ForcefulKinematicChain, DomainError> {
        let chain = self.contact_chain(method, yaw, extra)?;
        let (j, t) = arm_link(self.twister(), q, &self.lid_world(bottle))?;
        Ok(chain.with_joint(j, t))
    }

    /// Friction between the bottle base and a surface with coefficient `mu`.
    pub fn surface_chain(&self, mu: f64, extra: f64) -> Result<ForcefulKinematicChain, DomainError> {
        let b = &self.scene.bottle;
        let weight = b.mass * GRAVITY;
        let patch = CircularPatchJoint::new(mu, b.radius, weight + self.push(extra))?;
        Ok(ForcefulKinematicChain::new(LID).with_loaded_joint(
            Joint::new("bottle-surface", "support", JointModel::CircularPatch(patch)),
            Transform::from_translation(0.0, 0.0, b.height),
            Wrench::from_array([0.0, 0.0, -weight, 0.0, 0.0, 0.0], "support"),
        ))
    }

    /// A rigid grasp by `arm` at `q`, whose torques must stay in limits.
    pub fn robot_fixture_chain(
        &self,
        arm: &ArmPlacement,
        q: &Config,
        bottle: &Transform,
    ) -> Result<ForcefulKinematicChain, DomainError> {
        let (j, t) = arm_link(arm, q, &self.lid_world(bottle))?;
        Ok(ForcefulKinematicChain::new(LID)
            .with_joint(Joint::new("bottle-grasp", "bottle-grasp", JointModel::Rigid), Transform::identity())
            .with_joint(j, t))
    }

    pub fn vise_chain(&self) -> ForcefulKinematicChain {
        ForcefulKinematicChain::new(LID).with_joint(Joint::new("vise", "vise", JointModel::Rigid), Transform::identity())
    }

    pub fn twist_eval(&self, method: TwistMethod, yaw: f64, bottle: &Transform, q: &Config, extra: f64) -> ActionEval {
        self.twist_chain(method, yaw, bottle, q, extra)
            .and_then(|c| chain_eval(&c, &self.wrench(extra), &self.op.cost))
            .unwrap_or(INFEASIBLE)
    }

    pub fn surface_eval(&self, region: &str, extra: f64) -> ActionEval {
        let Some(r) = self.region(region) else {
            return INFEASIBLE;
        };
        self.surface_chain(r.mu, extra)
            .and_then(|c| chain_eval(&c, &self.wrench(extra), &self.op.cost))
            .unwrap_or(INFEASIBLE)
    }

    pub fn robot_fixture_eval(&self, arm: &ArmPlacement, q: &Config, bottle: &Transform, extra: f64) -> ActionEval {
        self.robot_fixture_chain(arm, q, bottle)
            .and_then(|c| chain_eval(&c, &self.wrench(extra), &self.op.cost))
            .unwrap_or(INFEASIBLE)
    }

    pub fn vise_eval(&self, extra: f64) -> ActionEval {
        chain_eval(&self.vise_chain(), &self.wrench(extra), &self.op.cost).unwrap_or(INFEASIBLE)
    }

    /// Mass and center of mass (object frame) of a graspable object.
    fn inertia(&self, object: &str) -> Option<(f64, Vector3<f64>)> {
        match object {
            BOTTLE => Some((self.scene.bottle.mass, Vector3::new(0.0, 0.0, self.scene.bottle.height / 2.0))),
            TOOL => self.scene.tool.as_ref().map(|t| (t.mass, Vector3::new(0.0, 0.0, t.length / 2.0))),
            _ => None,
        }
    }

    /// Holding `object` with grasp `ee` against its own weight.
    pub fn grasp_eval(&self, object: &str, ee: &Transform, pose: &Transform, cost: &CostModel) -> ActionEval {
        let Some((mass, com)) = self.inertia(object) else {
            return INFEASIBLE;
        };
        hanging_grasp_chain(&self.scene.hand, com, ee)
            .and_then(|c| chain_eval(&c, &gravity_wrench(mass, pose), cost))
            .unwrap_or(INFEASIBLE)
    }

    /// The planning problem: open the bottle.
    pub fn problem(self: &Arc<Self>) -> Result<Problem<Val>, DomainError> {
        build_problem(self)
    }
}

fn twist_schema_name(method: TwistMethod, fixture: &str) -> String {
    format!("{}-twist-{fixture}", method.name())
}

fn contact_predicate(method: TwistMethod) -> String {
    let mut n = method.name().to_string();
    n[..1].make_ascii_uppercase();
    format!("{n}Contact")
}

fn build_problem(model: &Arc<BottleModel>) -> Result<Problem<Val>, DomainError> {
    let s = &model.scene;
    let arms = Arc::new(s.arms.clone());
    let (mut values, mut init) = arm_values(&s.arms);
    init.push(atom("Twister", &[&s.arms[0].name]));
    for a in &s.arms[1..] {
        init.push(atom("Fixturer", &[&a.name]));
    }

    values.push(Value::new(BOTTLE, "object", Val::Symbol));
    values.push(Value::new(LID, "object", Val::Symbol));
    values.push(Value::new("w", "wrench", Val::Wrench { wrench: model.wrench(0.0) }));
    init.extend([
        atom("Bottle", &[BOTTLE]),
        atom("Graspable", &[BOTTLE]),
        atom("LidOf", &[LID, BOTTLE]),
        atom("Op", &[LID, "w"]),
        atom("Locked", &[LID]),
        atom("Pose", &[BOTTLE, "p0"]),
        atom("AtPose", &[BOTTLE, "p0"]),
        atom("Supported", &[BOTTLE, "p0"]),
    ]);
    values.push(Value::new("p0", "pose", model.start_pose()));
    for (k, f) in model.force_grid().into_iter().enumerate() {
        let label = format!("f{k}");
        values.push(Value::new(&label, "force", Val::Force { newtons: f }));
        init.push(atom("Force", &[&label]));
    }

    let use_tool = model.methods.contains(&TwistMethod::Tool);
    if use_tool {
        let t = s.tool.as_ref().expect("tool method requires a tool");
        values.push(Value::new(TOOL, "object", Val::Symbol));
        values.push(Value::new(
            "tool-p0",
            "pose",
            Val::Pose {
                object: TOOL.into(),
                region: "holder".into(),
                pose: Transform::from_translation(t.position[0], t.position[1], t.holder_height),
            },
        ));
        values.push(Value::new(
            "tool-g0",
            "grasp",
            Val::Grasp {
                object: TOOL.into(),
                ee: model.tool_grasp().expect("tool present"),
                offset: 0.0,
            },
        ));
        init.extend([
            atom("Tool", &[TOOL]),
            atom("Pose", &[TOOL, "tool-p0"]),
            atom("AtPose", &[TOOL, "tool-p0"]),
            atom("Grasp", &[TOOL, "tool-g0"]),
        ]);
    }

    let m = model.clone();
    let cost = model.op.cost;
    let grasp_cost: GraspCostFn = Arc::new(move |g, p| match (g.grasp(), p.pose()) {
        (Some((obj, ee, _)), Some((_, _, pose))) => m.grasp_eval(obj, ee, pose, &cost),
        _ => INFEASIBLE,
    });
    let (mut schemas, mut streams) = manipulation(arms.clone(), grasp_cost);

    schemas.push(
        ActionSchema::new("engage-vise", params(&[("?b", "object"), ("?p", "pose")]))
            .pre(vec![atom("InVise", &["?b", "?p"]), atom("AtPose", &["?b", "?p"])])
            .add(vec![atom("Engaged", &["?b", "?p"])]),
    );
    schemas.push(
        ActionSchema::new(
            "pick-cap",
            params(&[("?r", "robot"), ("?l", "object"), ("?b", "object"), ("?p", "pose"), ("?q", "conf")]),
        )
        .pre(vec![
            atom("CapKin", &["?r", "?b", "?p", "?q"]),
            atom("LidOf", &["?l", "?b"]),
            atom("TwistedAt", &["?l", "?p"]),
            atom("AtConf", &["?r", "?q"]),
            atom("HandEmpty", &["?r"]),
        ])
        .add(vec![atom("Open", &["?b"])])
        .del(vec![atom("HandEmpty", &["?r"])]),
    );
    for &method in &model.methods {
        for fixture in ["sf", "rf", "vf"] {
            schemas.push(twist_schema(model, method, fixture));
        }
    }

    streams.push(grasp_stream(model));
    if s.start == StartSurface::Table && s.mat.is_some() {
        streams.push(mat_stream(model));
    }
    if s.vise.is_some() {
        streams.push(vise_stream(model));
    }
    for &method in &model.methods {
        streams.push(contact_stream(model, method));
    }
    streams.push(twist_ik_stream(model));
    streams.push(cap_ik_stream(model));
    streams.push(twist_ok_stream(model));
    streams.push(surface_ok_stream(model));
    if s.arms.len() > 1 {
        streams.push(robot_fixture_stream(model));
    }

    Ok(Problem {
        values,
        init,
        goal: vec![atom("Open", &[BOTTLE])],
        schemas,
        streams,
    })
}

fn twist_schema(model: &Arc<BottleModel>, method: TwistMethod, fixture: &str) -> ActionSchema<Val> {
    let mut ps: Vec<Param> = params(&[
        ("?r", "robot"),
        ("?l", "object"),
        ("?b", "object"),
        ("?c", "contact"),
        ("?p", "pose"),
        ("?q", "conf"),
        ("?qp", "conf"),
        ("?f", "force"),
        ("?w", "wrench"),
    ]);
    let tool = method == TwistMethod::Tool;
    if tool {
        ps.extend(params(&[("?t", "object"), ("?gt", "grasp")]));
    }
    let rf = fixture == "rf";
    if rf {
        ps.extend(params(&[("?r2", "robot"), ("?g2", "grasp"), ("?q2", "conf")]));
    }
    let mut pre: Vec<Atom> = vec![atom("TwistOk", &["?r", "?b", "?c", "?p", "?q", "?qp", "?f"])];
    match fixture {
        "sf" => pre.push(atom("SfOk", &["?b", "?p", "?f"])),
        "rf" => pre.push(atom("RfOk", &["?r2", "?b", "?g2", "?p", "?q2", "?f"])),
        _ => {}
    }
    pre.extend([
        atom(&contact_predicate(method), &["?b", "?c"]),
        atom("LidOf", &["?l", "?b"]),
        atom("Op", &["?l", "?w"]),
        atom("AtConf", &["?r", "?q"]),
        atom("Locked", &["?l"]),
    ]);
    if tool {
        pre.push(atom("Tool", &["?t"]));
        pre.push(atom("Holding", &["?r", "?t", "?gt"]));
    } else {
        pre.push(atom("HandEmpty", &["?r"]));
    }
    match fixture {
        "sf" => pre.push(atom("AtPose", &["?b", "?p"])),
        "rf" => {
            pre.push(atom("Holding", &["?r2", "?b", "?g2"]));
            pre.push(atom("AtConf", &["?r2", "?q2"]));
        }
        _ => {
            pre.push(atom("Engaged", &["?b", "?p"]));
            pre.push(atom("AtPose", &["?b", "?p"]));
        }
    }
    let m = model.clone();
    let fixture_kind = fixture.to_string();
    let n = ps.len();
    ActionSchema::new(&twist_schema_name(method, fixture), ps)
        .pre(pre)
        .add(vec![atom("TwistedAt", &["?l", "?p"]), atom("AtConf", &["?r", "?qp"])])
        .del(vec![atom("Locked", &["?l"]), atom("AtConf", &["?r", "?q"])])
        .eval(move |v: &[&Value<Val>]| {
            let (Some((method, yaw)), Some((_, region, pose)), Some((_, q)), Some(f)) = (
                v[3].payload.contact(),
                v[4].payload.pose(),
                v[5].payload.conf(),
                v[7].payload.force(),
            ) else {
                return INFEASIBLE;
            };
            let twist = m.twist_eval(method, yaw, pose, q, f);
            let hold = match fixture_kind.as_str() {
                "sf" => m.surface_eval(region, f),
                "rf" => {
                    let Some((robot, q2)) = v[n - 1].payload.conf() else {
                        return INFEASIBLE;
                    };
                    match find_arm(&m.scene.arms, robot) {
                        Some(arm) => m.robot_fixture_eval(arm, q2, pose, f),
                        None => INFEASIBLE,
                    }
                }
                _ => m.vise_eval(f),
            };
            combine(&[twist, hold])
        })
}

/// Side grasps of the bottle. The first attempt for each arm approaches
/// from that arm's side; later ones try the opposite and perpendicular
/// sides, then random angles. Grasps that cannot hold the bottle up are
/// discarded.
fn grasp_stream(model: &Arc<BottleModel>) -> Stream<Val> {
    let m = model.clone();
    let sample = move |v: &[&Value<Val>], rng: &mut rand_chacha::ChaCha8Rng, attempt: u64| {
        let arm = find_arm(&m.scene.arms, &v[0].label)?;
        let (_, _, start) = m.start_pose_transform();
        let toward = start.translation - arm.base_pose().translation;
        let base = toward.y.atan2(toward.x) - BottleModel::yaw_of(&start);
        let theta = base + yaw_sample(attempt, &[0.0, PI / 2.0, -PI / 2.0, PI], rng);
        let ee = m.bottle_grasp(theta);
        let e = m.grasp_eval(BOTTLE, &ee, &Transform::identity(), &CostModel::Feasibility);
        if !e.cost.is_finite() {
            return None;
        }
        Some(vec![(
            "g".to_string(),
            Val::Grasp {
                object: BOTTLE.into(),
                ee,
                offset: theta,
            },
        )])
    };
    let m = model.clone();
    Stream::new("grasp", params(&[("?r", "robot"), ("?o", "object")]), params(&[("?g", "grasp")]), sample)
        .domain(vec![atom("Arm", &["?r"]), atom("Graspable", &["?o"])])
        .certifies(vec![atom("Grasp", &["?o", "?g"])])
        .verify(move |v| {
            let (obj, ee, _) = v[2].payload.grasp().ok_or("not a grasp")?;
            let e = m.grasp_eval(obj, ee, &Transform::identity(), &CostModel::Feasibility);
            if e.cost.is_finite() {
                Ok(e.margin)
            } else {
                Err("grasp cannot hold the object up".into())
            }
        })
}

impl BottleModel {
    fn start_pose_transform(&self) -> (String, String, Transform) {
        match self.start_pose() {
            Val::Pose { object, region, pose } => (object, region, pose),
            _ => unreachable!("start pose is a pose"),
        }
    }
}

fn mat_stream(model: &Arc<BottleModel>) -> Stream<Val> {
    let m = model.clone();
    let sample = move |_: &[&Value<Val>], rng: &mut rand_chacha::ChaCha8Rng, attempt: u64| {
        let mat = m.scene.mat?;
        let clear = m.scene.bottle.radius;
        let (hx, hy) = ((mat.size[0] / 2.0 - clear).max(0.0), (mat.size[1] / 2.0 - clear).max(0.0));
        let (dx, dy) = if attempt == 0 {
            (0.0, 0.0)
        } else {
            (rng.random_range(-hx..=hx), rng.random_range(-hy..=hy))
        };
        let yaw = yaw_sample(attempt, &[0.0], rng);
        let pose = m.bottle_pose(mat.center[0] + dx, mat.center[1] + dy, mat.height, yaw);
        Some(vec![(
            "p-mat".to_string(),
            Val::Pose {
                object: BOTTLE.into(),
                region: "mat".into(),
                pose,
            },
        )])
    };
    let m = model.clone();
    Stream::new("place-mat", params(&[("?b", "object")]), params(&[("?p", "pose")]), sample)
        .domain(vec![atom("Bottle", &["?b"])])
        .certifies(vec![atom("Pose", &["?b", "?p"]), atom("Supported", &["?b", "?p"])])
        .verify(move |v| {
            let (_, region, pose) = v[1].payload.pose().ok_or("not a pose")?;
            let mat = m.scene.mat.ok_or("no mat")?;
            let inside = region == "mat"
                && mat.contains(pose.translation.x, pose.translation.y, m.scene.bottle.radius - 1e-9)
                && (pose.translation.z - mat.height).abs() < 1e-9;
            if inside {
                Ok(None)
            } else {
                Err("pose is not on the mat".into())
            }
        })
}

fn vise_stream(model: &Arc<BottleModel>) -> Stream<Val> {
    let m = model.clone();
    let sample = move |_: &[&Value<Val>], rng: &mut rand_chacha::ChaCha8Rng, attempt: u64| {
        let vise = m.scene.vise?;
        let yaw = yaw_sample(attempt, &[0.0], rng);
        let pose = m.bottle_pose(vise.position[0], vise.position[1], m.scene.table.height, yaw);
        Some(vec![(
            "p-vise".to_string(),
            Val::Pose {
                object: BOTTLE.into(),
                region: "vise".into(),
                pose,
            },
        )])
    };
    let m = model.clone();
    Stream::new("place-vise", params(&[("?b", "object")]), params(&[("?p", "pose")]), sample)
        .domain(vec![atom("Bottle", &["?b"])])
        .certifies(vec![atom("Pose", &["?b", "?p"]), atom("InVise", &["?b", "?p"])])
        .verify(move |v| {
            let (_, region, pose) = v[1].payload.pose().ok_or("not a pose")?;
            let vise = m.scene.vise.ok_or("no vise")?;
            let d = (pose.translation.x - vise.position[0]).hypot(pose.translation.y - vise.position[1]);
            if region == "vise" && d < 1e-9 {
                Ok(None)
            } else {
                Err("pose is not in the vise jaws".into())
            }
        })
}

/// Where the hand meets the lid. Grasp contacts are kept only if the jaws
/// alone can transmit the operation wrench; pushing contacts depend on the
/// extra push and are checked by `twist-ok`.
fn contact_stream(model: &Arc<BottleModel>, method: TwistMethod) -> Stream<Val> {
    let m = model.clone();
    let sample = move |_: &[&Value<Val>], rng: &mut rand_chacha::ChaCha8Rng, attempt: u64| {
        let yaw = yaw_sample(attempt, &[0.0, PI / 2.0, -PI / 2.0], rng);
        if method == TwistMethod::Grasp && !m.contact_verdict(method, yaw, 0.0).ok()?.stable {
            return None;
        }
        Some(vec![(format!("c-{}", method.code().to_ascii_lowercase()), Val::Contact { method, yaw })])
    };
    let m = model.clone();
    let pred = contact_predicate(method);
    Stream::new(&format!("{}-contact", method.name()), params(&[("?b", "object")]), params(&[("?c", "contact")]), sample)
        .domain(vec![atom("Bottle", &["?b"])])
        .certifies(vec![atom("Contact", &["?b", "?c"]), atom(&pred, &["?b", "?c"])])
        .verify(move |v| {
            let (got, yaw) = v[1].payload.contact().ok_or("not a contact")?;
            if got != method {
                return Err(format!("contact is for {} twisting", got.name()));
            }
            if method == TwistMethod::Grasp {
                let verdict = m.contact_verdict(method, yaw, 0.0).map_err(|e| e.to_string())?;
                if !verdict.stable {
                    return Err("jaws cannot transmit the twist".into());
                }
                return Ok(Some(verdict.margin));
            }
            Ok(None)
        })
}

fn twist_ik_stream(model: &Arc<BottleModel>) -> Stream<Val> {
    let m = model.clone();
    let sample = move |v: &[&Value<Val>], rng: &mut rand_chacha::ChaCha8Rng, _: u64| {
        let arm = find_arm(&m.scene.arms, &v[0].label)?;
        let (method, yaw) = v[2].payload.contact()?;
        let (_, _, pose) = v[3].payload.pose()?;
        let q = solve_ik(arm, &m.twist_target(method, yaw, pose), rng, IK_RESTARTS)?;
        let (q, qp) = m.with_twist_room(arm, q)?;
        let conf = |q| Val::Conf { robot: arm.name.clone(), q };
        Some(vec![
            (format!("{}-qtw", arm.name), conf(q)),
            (format!("{}-qpost", arm.name), conf(qp)),
        ])
    };
    let m = model.clone();
    Stream::new(
        "twist-ik",
        params(&[("?r", "robot"), ("?b", "object"), ("?c", "contact"), ("?p", "pose")]),
        params(&[("?q", "conf"), ("?qp", "conf")]),
        sample,
    )
    .domain(vec![
        atom("Twister", &["?r"]),
        atom("Contact", &["?b", "?c"]),
        atom("Pose", &["?b", "?p"]),
    ])
    .certifies(vec![
        atom("TwistKin", &["?r", "?b", "?c", "?p", "?q", "?qp"]),
        atom("Conf", &["?r", "?q"]),
        atom("Conf", &["?r", "?qp"]),
    ])
    .max_calls(1)
    .verify(move |v| {
        let arm = find_arm(&m.scene.arms, &v[0].label).ok_or("unknown robot")?;
        let (method, yaw) = v[2].payload.contact().ok_or("not a contact")?;
        let (_, _, pose) = v[3].payload.pose().ok_or("not a pose")?;
        let (_, q) = v[4].payload.conf().ok_or("not a configuration")?;
        let (_, qp) = v[5].payload.conf().ok_or("not a configuration")?;
        let start = [yaw, yaw + PI].map(|y| m.twist_target(method, y, pose));
        if start.iter().any(|t| reaches(arm, q, t)) && m.after_twist(arm, q).as_ref() == Some(qp) {
            Ok(None)
        } else {
            Err("configurations do not perform the twist".into())
        }
    })
}

impl BottleModel {
    /// Turning the last joint turns the hand about the lid axis; the tool
    /// axis points down, so unscrewing is a negative joint rotation.
    pub fn after_twist(&self, arm: &ArmPlacement, q: &Config) -> Option<Config> {
        let mut qp = q.clone();
        let last = qp.0.last_mut()?;
        *last -= self.op.twist_angle;
        arm.model.within_limits(&qp).then_some(qp)
    }

    /// Every twisting contact looks the same after a half turn of the hand,
    /// so the wrist may be flipped by `π` to leave room for the twist.
    fn with_twist_room(&self, arm: &ArmPlacement, q: Config) -> Option<(Config, Config)> {
        [0.0, PI, -PI].into_iter().find_map(|d| {
            let mut q = q.clone();
            *q.0.last_mut()? += d;
            if !arm.model.within_limits(&q) {
                return None;
            }
            let qp = self.after_twist(arm, &q)?;
            Some((q, qp))
        })
    }
}

fn cap_ik_stream(model: &Arc<BottleModel>) -> Stream<Val> {
    let m = model.clone();
    let sample = move |v: &[&Value<Val>], rng: &mut rand_chacha::ChaCha8Rng, _: u64| {
        let arm = find_arm(&m.scene.arms, &v[0].label)?;
        let (_, _, pose) = v[2].payload.pose()?;
        let q = solve_ik(arm, &m.cap_target(pose), rng, IK_RESTARTS)?;
        Some(vec![(format!("{}-qcap", arm.name), Val::Conf { robot: arm.name.clone(), q })])
    };
    let m = model.clone();
    Stream::new(
        "cap-ik",
        params(&[("?r", "robot"), ("?b", "object"), ("?p", "pose")]),
        params(&[("?q", "conf")]),
        sample,
    )
    .domain(vec![atom("Twister", &["?r"]), atom("Bottle", &["?b"]), atom("Pose", &["?b", "?p"])])
    .certifies(vec![atom("CapKin", &["?r", "?b", "?p", "?q"]), atom("Conf", &["?r", "?q"])])
    .max_calls(1)
    .verify(move |v| {
        let arm = find_arm(&m.scene.arms, &v[0].label).ok_or("unknown robot")?;
        let (_, _, pose) = v[2].payload.pose().ok_or("not a pose")?;
        let (_, q) = v[3].payload.conf().ok_or("not a configuration")?;
        if reaches(arm, q, &m.cap_target(pose)) {
            Ok(None)
        } else {
            Err("configuration does not reach the cap".into())
        }
    })
}

fn test_result(verdict: Result<StabilityVerdict, DomainError>) -> Result<Option<f64>, String> {
    match verdict {
        Ok(v) if v.stable => Ok(Some(v.margin)),
        Ok(v) => Err(format!("unstable (margin {:.4})", v.margin)),
        Err(e) => Err(e.to_string()),
    }
}

fn as_sample(r: Result<Option<f64>, String>) -> Option<Vec<(String, Val)>> {
    r.ok().map(|_| Vec::new())
}

fn twist_ok_stream(model: &Arc<BottleModel>) -> Stream<Val> {
    let m = model.clone();
    let check = move |v: &[&Value<Val>]| -> Result<Option<f64>, String> {
        let (method, yaw) = v[2].payload.contact().ok_or("not a contact")?;
        let (_, _, pose) = v[3].payload.pose().ok_or("not a pose")?;
        let (_, q) = v[4].payload.conf().ok_or("not a configuration")?;
        let f = v[6].payload.force().ok_or("not a force")?;
        let verdict = m
            .twist_chain(method, yaw, pose, q, f)
            .and_then(|c| Ok(chain_stable(&c, &m.wrench(f))?));
        test_result(verdict)
    };
    let check = Arc::new(check);
    let c2 = check.clone();
    Stream::new(
        "twist-ok",
        params(&[
            ("?r", "robot"),
            ("?b", "object"),
            ("?c", "contact"),
            ("?p", "pose"),
            ("?q", "conf"),
            ("?qp", "conf"),
            ("?f", "force"),
        ]),
        Vec::new(),
        move |v, _, _| as_sample(check(v)),
    )
    .domain(vec![atom("TwistKin", &["?r", "?b", "?c", "?p", "?q", "?qp"]), atom("Force", &["?f"])])
    .certifies(vec![atom("TwistOk", &["?r", "?b", "?c", "?p", "?q", "?qp", "?f"])])
    .max_calls(1)
    .verify(move |v| c2(v))
}

fn surface_ok_stream(model: &Arc<BottleModel>) -> Stream<Val> {
    let m = model.clone();
    let check = Arc::new(move |v: &[&Value<Val>]| -> Result<Option<f64>, String> {
        let (_, region, _) = v[1].payload.pose().ok_or("not a pose")?;
        let f = v[2].payload.force().ok_or("not a force")?;
        let r = m.region(region).ok_or_else(|| format!("{region} is not a support surface"))?;
        test_result(m.surface_chain(r.mu, f).and_then(|c| Ok(chain_stable(&c, &m.wrench(f))?)))
    });
    let c2 = check.clone();
    Stream::new(
        "sf-ok",
        params(&[("?b", "object"), ("?p", "pose"), ("?f", "force")]),
        Vec::new(),
        move |v, _, _| as_sample(check(v)),
    )
    .domain(vec![atom("Supported", &["?b", "?p"]), atom("Force", &["?f"])])
    .certifies(vec![atom("SfOk", &["?b", "?p", "?f"])])
    .max_calls(1)
    .verify(move |v| c2(v))
}

fn robot_fixture_stream(model: &Arc<BottleModel>) -> Stream<Val> {
    let m = model.clone();
    let check = Arc::new(move |v: &[&Value<Val>]| -> Result<Option<f64>, String> {
        let arm = find_arm(&m.scene.arms, &v[0].label).ok_or("unknown robot")?;
        let (_, _, pose) = v[3].payload.pose().ok_or("not a pose")?;
        let (_, q) = v[4].payload.conf().ok_or("not a configuration")?;
        let f = v[5].payload.force().ok_or("not a force")?;
        test_result(
            m.robot_fixture_chain(arm, q, pose)
                .and_then(|c| Ok(chain_stable(&c, &m.wrench(f))?)),
        )
    });
    let c2 = check.clone();
    Stream::new(
        "rf-ok",
        params(&[
            ("?r", "robot"),
            ("?b", "object"),
            ("?g", "grasp"),
            ("?p", "pose"),
            ("?q", "conf"),
            ("?f", "force"),
        ]),
        Vec::new(),
        move |v, _, _| as_sample(check(v)),
    )
    .domain(vec![
        atom("Kin", &["?r", "?b", "?g", "?p", "?q"]),
        atom("Fixturer", &["?r"]),
        atom("Bottle", &["?b"]),
        atom("Force", &["?f"]),
    ])
    .certifies(vec![atom("RfOk", &["?r", "?b", "?g", "?p", "?q", "?f"])])
    .max_calls(1)
    .verify(move |v| c2(v))
}

/// Strategy of a bottle plan, e.g. `GT+SF(M)`: the twist method and how
/// the bottle was held while twisting.
pub fn strategy_label(plan: &Plan<Val>) -> Option<String> {
    let twist = plan.actions.iter().find(|a| a.schema.contains("-twist-"))?;
    let (method, fixture) = twist.schema.split_once("-twist-")?;
    let method = TwistMethod::ALL.into_iter().find(|m| m.name() == method)?;
    let fixture = match fixture {
        "sf" => {
            let (_, region, _) = twist.arg("pose")?.payload.pose()?;
            match region {
                "mat" => Fixture::SurfaceMat,
                _ => Fixture::SurfaceTable,
            }
        }
        "rf" => Fixture::Robot,
        _ => Fixture::Vise,
    };
    Some(format!("{}+{}", method.code(), fixture.code()))
}

#[cfg(test)]
mod tests;
