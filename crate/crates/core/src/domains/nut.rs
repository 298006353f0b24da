//! Twisting a nut on a bolt that sticks up from the middle of a beam lying
//! loose on the table. The beam must be held still: by a second arm, or by
//! weighing it down so friction with the table resists the twist.
//!
//! Nut frame: origin at the nut center, `z` up along the bolt. The
//! operation wrench is `(0, 0, 0, 0, 0, t_z)` in that frame.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scene::NutScene;
use super::{
    arm_link, arm_values, chain_eval, combine, ee_down, find_arm, gravity_wrench,
    hanging_grasp_chain, jaw_patch, manipulation, reaches, solve_ik, yaw_sample, ArmPlacement,
    CostModel, DomainError, ForcefulOperation, GraspCostFn, TwistMethod, Val, INFEASIBLE,
    IK_RESTARTS,
};
use crate::planner::{atom, params, ActionEval, ActionSchema, Atom, Param, Plan, Problem, Stream, Value};
use crate::robot::Config;
use crate::robustness::PerturbationSpec;
use crate::spatial::{Transform, Wrench};
use crate::stability::{
    beam_support_forces, beam_table_patch, chain_stable, ForcefulKinematicChain, Joint, JointModel,
    StabilityVerdict, GRAVITY,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NutOperation {
    /// Loosening torque about the bolt axis, N·m.
    pub torque: f64,
    #[serde(skip, default = "robust")]
    pub cost: CostModel,
    /// Only `rf` has an effect here: it removes every arm but the first.
    pub disable: BTreeSet<String>,
}

fn robust() -> CostModel {
    CostModel::Robust {
        perturbation: PerturbationSpec::default(),
    }
}

impl Default for NutOperation {
    fn default() -> Self {
        Self {
            torque: 0.5,
            cost: robust(),
            disable: BTreeSet::new(),
        }
    }
}

const NUT: &str = "nut";
const BEAM: &str = "beam";
const SPANNER: &str = "spanner";

#[derive(Debug, Clone, PartialEq)]
pub struct NutModel {
    pub scene: NutScene,
    pub op: NutOperation,
}

impl NutModel {
    pub fn new(mut scene: NutScene, op: NutOperation) -> Result<Self, DomainError> {
        if op.disable.contains("rf") {
            scene.arms.truncate(1);
        }
        let model = Self { scene, op };
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
            if !names.insert(a.name.clone()) {
                return Err(DomainError::Invalid(format!("arm name {} is not unique", a.name)));
            }
        }
        let b = &s.beam;
        for (name, v) in [
            ("beam.length", b.length),
            ("beam.width", b.width),
            ("beam.height", b.height),
            ("beam.mass", b.mass),
            ("beam.mu", b.mu),
            ("weight_extent", s.weight_extent),
            ("weight_width", s.weight_width),
            ("hand.grip_force", s.hand.grip_force),
            ("hand.mu", s.hand.mu),
            ("hand.pad_size", s.hand.pad_size),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DomainError::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (i, w) in s.weights.iter().enumerate() {
            if !(w.mass > 0.0 && w.mass.is_finite()) {
                return Err(DomainError::Invalid(format!("weights[{i}].mass must be positive")));
            }
        }
        if self.placement_range().is_none() {
            return Err(DomainError::Invalid(
                "weights do not fit on the beam between the bolt and the ends".into(),
            ));
        }
        if !self.op.torque.is_finite() {
            return Err(DomainError::Invalid("torque must be finite".into()));
        }
        if let CostModel::Robust { perturbation } = &self.op.cost {
            perturbation.validate()?;
        }
        Ok(())
    }

    pub fn operation(&self) -> ForcefulOperation {
        ForcefulOperation {
            wrench: self.wrench(),
            fixture_target: BEAM.into(),
        }
    }

    pub fn wrench(&self) -> Wrench {
        Wrench::from_array([0.0, 0.0, 0.0, 0.0, 0.0, self.op.torque], NUT)
    }

    pub fn twister(&self) -> &ArmPlacement {
        &self.scene.arms[0]
    }

    pub fn nut_world(&self) -> Transform {
        let b = &self.scene.beam;
        Transform::from_translation(b.position[0], b.position[1], b.height + self.scene.nut.height)
    }

    /// Beam frame: bottom center, `x` along the beam.
    pub fn beam_world(&self) -> Transform {
        let b = &self.scene.beam;
        Transform::rot_z(PI / 2.0).with_translation(b.position[0], b.position[1], 0.0)
    }

    /// Allowed distances of a weight's center from the bolt along the beam.
    pub fn placement_range(&self) -> Option<(f64, f64)> {
        let s = &self.scene;
        let lo = s.bolt_clearance + s.weight_extent / 2.0;
        let hi = s.beam.length / 2.0 - s.weight_extent / 2.0;
        (lo <= hi).then_some((lo, hi))
    }

    /// Weight resting on the beam at signed distance `s` from the bolt.
    pub fn beam_pose(&self, s: f64) -> Transform {
        let b = &self.scene.beam;
        Transform::rot_z(PI / 2.0).with_translation(b.position[0], b.position[1] + s, b.height)
    }

    /// Signed distance of a pose from the bolt along the beam.
    fn along_beam(&self, pose: &Transform) -> f64 {
        self.beam_world().inverse().apply_point(&pose.translation).x
    }

    pub fn weight_mass(&self, object: &str) -> Option<f64> {
        let i: usize = object.strip_prefix("weight")?.parse().ok()?;
        self.scene.weights.get(i).map(|w| w.mass)
    }

    /// Jaws around the middle of the weight, `offset` from its center along
    /// its length, closing across its width.
    pub fn weight_grasp(&self, offset: f64) -> Transform {
        ee_down(Vector3::new(offset, 0.0, self.scene.weight_width / 2.0), 0.0)
    }

    /// Holding a weight of `mass` against gravity with grasp `ee`.
    pub fn grasp_chain(&self, ee: &Transform) -> Result<ForcefulKinematicChain, DomainError> {
        hanging_grasp_chain(&self.scene.hand, Vector3::new(0.0, 0.0, self.scene.weight_width / 2.0), ee)
    }

    pub fn grasp_eval(&self, mass: f64, ee: &Transform, cost: &CostModel) -> ActionEval {
        self.grasp_chain(ee)
            .and_then(|c| chain_eval(&c, &gravity_wrench(mass, &Transform::identity()), cost))
            .unwrap_or(INFEASIBLE)
    }

    /// Beam-table friction with a weight of `mass` centered `s` from the
    /// bolt (or no weight). The beam's own weight rests equally on both ends.
    pub fn weight_fixture_chain(&self, load: Option<(f64, f64)>) -> Result<ForcefulKinematicChain, DomainError> {
        let b = &self.scene.beam;
        let own = b.mass * GRAVITY / 2.0;
        let (mut left, mut right) = (own, own);
        if let Some((mass, s)) = load {
            let (l, r) = beam_support_forces(b.length, mass, b.length / 2.0 + s, self.scene.weight_extent, GRAVITY)?;
            left += l;
            right += r;
        }
        let patch = beam_table_patch(b.length, b.width, b.mu, left, right)?;
        let t = self.beam_world().inverse().compose(&self.nut_world());
        Ok(ForcefulKinematicChain::new(NUT).with_joint(
            Joint::new("beam-table", "beam-table", JointModel::PolygonPatch(patch)),
            t,
        ))
    }

    pub fn weight_fixture_eval(&self, mass: f64, s: f64) -> ActionEval {
        self.weight_fixture_chain(Some((mass, s)))
            .and_then(|c| chain_eval(&c, &self.wrench(), &self.op.cost))
            .unwrap_or(INFEASIBLE)
    }

    /// The second arm grasps the beam rigidly.
    pub fn robot_fixture_chain(&self, arm: &ArmPlacement, q: &Config) -> Result<ForcefulKinematicChain, DomainError> {
        let (j, t) = arm_link(arm, q, &self.nut_world())?;
        Ok(ForcefulKinematicChain::new(NUT)
            .with_joint(Joint::new("beam-grasp", "beam-grasp", JointModel::Rigid), Transform::identity())
            .with_joint(j, t))
    }

    /// Twist chain with the fingers wrapped around the nut, or through a
    /// spanner whose handle is held at contact yaw `yaw`.
    pub fn twist_chain(&self, method: TwistMethod, yaw: f64, q: &Config) -> Result<ForcefulKinematicChain, DomainError> {
        let mut chain = ForcefulKinematicChain::new(NUT);
        match method {
            TwistMethod::Tool => {
                let sp = self.scene.spanner.ok_or_else(|| DomainError::Missing("the spanner".into()))?;
                chain = chain
                    .with_joint(Joint::new("spanner-nut", "spanner-nut", JointModel::Rigid), Transform::identity())
                    .with_joint(
                        Joint::new(
                            "hand-spanner",
                            "hand-spanner",
                            JointModel::PolygonPatch(jaw_patch(&self.scene.hand, self.scene.hand.mu)?),
                        ),
                        Transform::new(Transform::rot_z(-yaw).rotation, Vector3::new(-sp.lever, 0.0, 0.0)),
                    );
            }
            _ => {
                chain = chain.with_joint(Joint::new("fingers-nut", "fingers-nut", JointModel::Rigid), Transform::identity());
            }
        }
        let (j, t) = arm_link(self.twister(), q, &self.nut_world())?;
        Ok(chain.with_joint(j, t))
    }

    pub fn twist_target(&self, method: TwistMethod, yaw: f64) -> Transform {
        let nut = self.nut_world().translation;
        match (method, self.scene.spanner) {
            (TwistMethod::Tool, Some(sp)) => {
                let handle = nut + Vector3::new(yaw.cos(), yaw.sin(), 0.0) * sp.lever;
                ee_down(handle, yaw + PI / 2.0)
            }
            _ => ee_down(nut, yaw),
        }
    }

    pub fn twist_eval(&self, method: TwistMethod, yaw: f64, q: &Config) -> ActionEval {
        self.twist_chain(method, yaw, q)
            .and_then(|c| chain_eval(&c, &self.wrench(), &self.op.cost))
            .unwrap_or(INFEASIBLE)
    }

    pub fn beam_grasp_target(&self, arm: &ArmPlacement) -> Transform {
        let b = &self.scene.beam;
        // hold the end nearer the arm, jaws across the beam
        let near = (arm.base[1] - b.position[1]).signum();
        let s = near * (b.length / 2.0 - 0.05);
        ee_down(
            Vector3::new(b.position[0], b.position[1] + s, b.height / 2.0),
            PI / 2.0,
        )
    }

    pub fn spanner_grasp(&self) -> Option<Transform> {
        let sp = self.scene.spanner?;
        Some(ee_down(Vector3::new(sp.lever, 0.0, 0.0), PI / 2.0))
    }

    pub fn problem(self: &Arc<Self>) -> Result<Problem<Val>, DomainError> {
        build_problem(self)
    }
}

fn verdict_result(v: Result<StabilityVerdict, DomainError>) -> Result<Option<f64>, String> {
    match v {
        Ok(v) if v.stable => Ok(Some(v.margin)),
        Ok(v) => Err(format!("unstable (margin {:.4})", v.margin)),
        Err(e) => Err(e.to_string()),
    }
}

fn build_problem(model: &Arc<NutModel>) -> Result<Problem<Val>, DomainError> {
    let s = &model.scene;
    let (mut values, mut init) = arm_values(&s.arms);
    init.push(atom("Twister", &[&s.arms[0].name]));
    for a in &s.arms[1..] {
        init.push(atom("Fixturer", &[&a.name]));
    }
    values.push(Value::new(NUT, "object", Val::Symbol));
    values.push(Value::new(BEAM, "object", Val::Symbol));
    values.push(Value::new("w", "wrench", Val::Wrench { wrench: model.wrench() }));
    init.extend([
        atom("Nut", &[NUT]),
        atom("Beam", &[BEAM]),
        atom("NutOn", &[NUT, BEAM]),
        atom("Op", &[NUT, "w"]),
        atom("Tight", &[NUT]),
    ]);
    for (i, w) in s.weights.iter().enumerate() {
        let (o, p) = (format!("weight{i}"), format!("weight{i}-p0"));
        values.push(Value::new(&o, "object", Val::Symbol));
        values.push(Value::new(
            &p,
            "pose",
            Val::Pose {
                object: o.clone(),
                region: "table".into(),
                pose: Transform::from_translation(w.position[0], w.position[1], 0.0),
            },
        ));
        init.extend([atom("Weight", &[&o]), atom("Pose", &[&o, &p]), atom("AtPose", &[&o, &p])]);
    }
    if let Some(sp) = s.spanner {
        values.push(Value::new(SPANNER, "object", Val::Symbol));
        values.push(Value::new(
            "spanner-p0",
            "pose",
            Val::Pose {
                object: SPANNER.into(),
                region: "table".into(),
                pose: Transform::from_translation(sp.position[0], sp.position[1], 0.0),
            },
        ));
        values.push(Value::new(
            "spanner-g0",
            "grasp",
            Val::Grasp {
                object: SPANNER.into(),
                ee: model.spanner_grasp().expect("spanner present"),
                offset: 0.0,
            },
        ));
        init.extend([
            atom("Spanner", &[SPANNER]),
            atom("Pose", &[SPANNER, "spanner-p0"]),
            atom("AtPose", &[SPANNER, "spanner-p0"]),
            atom("Grasp", &[SPANNER, "spanner-g0"]),
        ]);
    }

    let m = model.clone();
    let cost = model.op.cost;
    let grasp_cost: GraspCostFn = Arc::new(move |g, _| match g.grasp() {
        Some((obj, ee, _)) => match m.weight_mass(obj) {
            Some(mass) => m.grasp_eval(mass, ee, &cost),
            None => ActionEval::FREE,
        },
        None => INFEASIBLE,
    });
    let arms = Arc::new(s.arms.clone());
    let (mut schemas, mut streams) = manipulation(arms, grasp_cost);

    schemas.push(
        ActionSchema::new(
            "place-weight",
            params(&[("?r", "robot"), ("?o", "object"), ("?g", "grasp"), ("?bp", "pose"), ("?q", "conf")]),
        )
        .pre(vec![
            atom("BeamFix", &["?o", "?g", "?bp"]),
            atom("Kin", &["?r", "?o", "?g", "?bp", "?q"]),
            atom("Holding", &["?r", "?o", "?g"]),
            atom("AtConf", &["?r", "?q"]),
        ])
        .add(vec![
            atom("AtPose", &["?o", "?bp"]),
            atom("OnBeam", &["?o", "?bp"]),
            atom("HandEmpty", &["?r"]),
        ])
        .del(vec![atom("Holding", &["?r", "?o", "?g"])]),
    );
    if s.arms.len() > 1 {
        schemas.push(
            ActionSchema::new("fixture-grasp", params(&[("?r", "robot"), ("?b", "object"), ("?q", "conf")]))
                .pre(vec![
                    atom("BeamHoldOk", &["?r", "?b", "?q"]),
                    atom("AtConf", &["?r", "?q"]),
                    atom("HandEmpty", &["?r"]),
                ])
                .add(vec![atom("BeamHeld", &["?r", "?b"])])
                .del(vec![atom("HandEmpty", &["?r"])]),
        );
    }
    let mut methods = vec![TwistMethod::Finger];
    if s.spanner.is_some() {
        methods.push(TwistMethod::Tool);
    }
    for &method in &methods {
        if s.arms.len() > 1 {
            schemas.push(nut_twist_schema(model, method, "rf"));
        }
        if !s.weights.is_empty() {
            schemas.push(nut_twist_schema(model, method, "weight"));
        }
    }

    if !s.weights.is_empty() {
        streams.push(weight_grasp_stream(model));
        streams.push(beam_place_stream(model));
    }
    streams.push(nut_contact_stream(&methods));
    streams.push(nut_ik_stream(model));
    streams.push(nut_ok_stream(model));
    if s.arms.len() > 1 {
        streams.push(beam_ik_stream(model));
    }

    Ok(Problem {
        values,
        init,
        goal: vec![atom("Loose", &[NUT])],
        schemas,
        streams,
    })
}

fn nut_twist_schema(model: &Arc<NutModel>, method: TwistMethod, fixture: &str) -> ActionSchema<Val> {
    let name = match method {
        TwistMethod::Tool => format!("spanner-twist-{fixture}"),
        _ => format!("finger-twist-nut-{fixture}"),
    };
    let mut ps: Vec<Param> = params(&[
        ("?r", "robot"),
        ("?n", "object"),
        ("?c", "contact"),
        ("?q", "conf"),
        ("?b", "object"),
        ("?w", "wrench"),
    ]);
    let mut pre: Vec<Atom> = vec![atom("NutOk", &["?r", "?n", "?c", "?q"])];
    let weight = fixture == "weight";
    if weight {
        ps.extend(params(&[("?o", "object"), ("?g", "grasp"), ("?bp", "pose")]));
        pre.push(atom("BeamFix", &["?o", "?g", "?bp"]));
    } else {
        ps.extend(params(&[("?r2", "robot"), ("?q2", "conf")]));
        pre.push(atom("BeamHoldOk", &["?r2", "?b", "?q2"]));
    }
    let tool = method == TwistMethod::Tool;
    if tool {
        ps.extend(params(&[("?s", "object"), ("?gs", "grasp")]));
    }
    pre.extend([
        atom("NutOn", &["?n", "?b"]),
        atom("Op", &["?n", "?w"]),
        atom("AtConf", &["?r", "?q"]),
        atom("Tight", &["?n"]),
    ]);
    if weight {
        pre.push(atom("OnBeam", &["?o", "?bp"]));
    } else {
        pre.push(atom("BeamHeld", &["?r2", "?b"]));
        pre.push(atom("AtConf", &["?r2", "?q2"]));
    }
    if tool {
        pre.push(atom("Spanner", &["?s"]));
        pre.push(atom("Holding", &["?r", "?s", "?gs"]));
    } else {
        pre.push(atom("HandEmpty", &["?r"]));
    }
    let m = model.clone();
    ActionSchema::new(&name, ps)
        .pre(pre)
        .add(vec![atom("Loose", &["?n"])])
        .del(vec![atom("Tight", &["?n"])])
        .eval(move |v: &[&Value<Val>]| {
            let (Some((method, yaw)), Some((_, q))) = (v[2].payload.contact(), v[3].payload.conf()) else {
                return INFEASIBLE;
            };
            let twist = m.twist_eval(method, yaw, q);
            let hold = if weight {
                let Some((obj, _, pose)) = v[8].payload.pose() else {
                    return INFEASIBLE;
                };
                match m.weight_mass(obj) {
                    Some(mass) => m.weight_fixture_eval(mass, m.along_beam(pose)),
                    None => INFEASIBLE,
                }
            } else {
                let Some((robot, q2)) = v[7].payload.conf() else {
                    return INFEASIBLE;
                };
                match find_arm(&m.scene.arms, robot) {
                    Some(arm) => m
                        .robot_fixture_chain(arm, q2)
                        .and_then(|c| chain_eval(&c, &m.wrench(), &m.op.cost))
                        .unwrap_or(INFEASIBLE),
                    None => INFEASIBLE,
                }
            };
            combine(&[twist, hold])
        })
}

/// Grasps of a weight sliding along its length: centered first, then
/// uniform offsets. Grasps that cannot lift the weight are discarded.
fn weight_grasp_stream(model: &Arc<NutModel>) -> Stream<Val> {
    let m = model.clone();
    let sample = move |v: &[&Value<Val>], rng: &mut ChaCha8Rng, attempt: u64| {
        let mass = m.weight_mass(&v[1].label)?;
        let r = m.scene.grasp_offset;
        let offset = if attempt == 0 || r == 0.0 { 0.0 } else { rng.random_range(-r..=r) };
        let ee = m.weight_grasp(offset);
        if !m.grasp_eval(mass, &ee, &CostModel::Feasibility).cost.is_finite() {
            return None;
        }
        Some(vec![(
            "g".to_string(),
            Val::Grasp {
                object: v[1].label.clone(),
                ee,
                offset,
            },
        )])
    };
    let m = model.clone();
    Stream::new("grasp", params(&[("?r", "robot"), ("?o", "object")]), params(&[("?g", "grasp")]), sample)
        .domain(vec![atom("Arm", &["?r"]), atom("Weight", &["?o"])])
        .certifies(vec![atom("Grasp", &["?o", "?g"])])
        .verify(move |v| {
            let (obj, ee, _) = v[2].payload.grasp().ok_or("not a grasp")?;
            let mass = m.weight_mass(obj).ok_or("not a weight")?;
            verdict_result(m.grasp_chain(ee).and_then(|c| {
                Ok(chain_stable(&c, &gravity_wrench(mass, &Transform::identity()))?)
            }))
        })
}

/// Spots on the beam for a weight held with a given grasp, kept only when
/// the weight there holds the beam against the twist and the grasp can
/// carry the weight.
fn beam_place_stream(model: &Arc<NutModel>) -> Stream<Val> {
    let m = model.clone();
    let check = Arc::new(move |v: &[&Value<Val>]| -> Result<Option<f64>, String> {
        let obj = &v[0].label;
        let mass = m.weight_mass(obj).ok_or("not a weight")?;
        let (_, ee, _) = v[1].payload.grasp().ok_or("not a grasp")?;
        let (pobj, region, pose) = v[2].payload.pose().ok_or("not a pose")?;
        if pobj != obj || region != "beam" {
            return Err("pose is not on the beam".into());
        }
        let s = m.along_beam(pose);
        let (lo, hi) = m.placement_range().ok_or("no room on the beam")?;
        if !(s.abs() >= lo - 1e-9 && s.abs() <= hi + 1e-9) {
            return Err("weight overlaps the bolt or hangs off the beam".into());
        }
        let fix = verdict_result(
            m.weight_fixture_chain(Some((mass, s)))
                .and_then(|c| Ok(chain_stable(&c, &m.wrench())?)),
        )?;
        let hold = verdict_result(m.grasp_chain(ee).and_then(|c| {
            Ok(chain_stable(&c, &gravity_wrench(mass, &Transform::identity()))?)
        }))?;
        Ok(match (fix, hold) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        })
    });
    let m2 = model.clone();
    let c = check.clone();
    let sample = move |v: &[&Value<Val>], rng: &mut ChaCha8Rng, attempt: u64| {
        let (lo, hi) = m2.placement_range()?;
        let s = if attempt == 0 {
            (lo + hi) / 2.0
        } else {
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            side * rng.random_range(lo..=hi)
        };
        let pose = Val::Pose {
            object: v[0].label.clone(),
            region: "beam".into(),
            pose: m2.beam_pose(s),
        };
        let out = Value::new("tmp", "pose", pose.clone());
        c(&[v[0], v[1], &out]).ok()?;
        Some(vec![("bp".to_string(), pose)])
    };
    Stream::new(
        "beam-place",
        params(&[("?o", "object"), ("?g", "grasp")]),
        params(&[("?bp", "pose")]),
        sample,
    )
    .domain(vec![atom("Grasp", &["?o", "?g"]), atom("Weight", &["?o"])])
    .certifies(vec![atom("Pose", &["?o", "?bp"]), atom("BeamFix", &["?o", "?g", "?bp"])])
    .verify(move |v| check(v))
}

fn nut_contact_stream(methods: &[TwistMethod]) -> Stream<Val> {
    let all = methods.to_vec();
    let sample = move |_: &[&Value<Val>], rng: &mut ChaCha8Rng, attempt: u64| {
        let method = all[attempt as usize % all.len()];
        let k = attempt / all.len() as u64;
        // the hand comes from the arm's side; quarter turns suit a hexagon
        let yaw = yaw_sample(k, &[PI, PI / 2.0, -PI / 2.0], rng);
        Some(vec![(format!("c-{}", method.name()), Val::Contact { method, yaw })])
    };
    let all = methods.to_vec();
    Stream::new("nut-contact", params(&[("?n", "object")]), params(&[("?c", "contact")]), sample)
        .domain(vec![atom("Nut", &["?n"])])
        .certifies(vec![atom("NutContact", &["?n", "?c"])])
        .verify(move |v| match v[1].payload.contact() {
            Some((m, _)) if all.contains(&m) => Ok(None),
            _ => Err("not a contact this scene can make".into()),
        })
}

fn nut_ik_stream(model: &Arc<NutModel>) -> Stream<Val> {
    let m = model.clone();
    let sample = move |v: &[&Value<Val>], rng: &mut ChaCha8Rng, _: u64| {
        let arm = find_arm(&m.scene.arms, &v[0].label)?;
        let (method, yaw) = v[2].payload.contact()?;
        let q = solve_ik(arm, &m.twist_target(method, yaw), rng, IK_RESTARTS)?;
        Some(vec![(format!("{}-qnut", arm.name), Val::Conf { robot: arm.name.clone(), q })])
    };
    let m = model.clone();
    Stream::new(
        "nut-ik",
        params(&[("?r", "robot"), ("?n", "object"), ("?c", "contact")]),
        params(&[("?q", "conf")]),
        sample,
    )
    .domain(vec![atom("Twister", &["?r"]), atom("NutContact", &["?n", "?c"])])
    .certifies(vec![atom("NutKin", &["?r", "?n", "?c", "?q"]), atom("Conf", &["?r", "?q"])])
    .max_calls(1)
    .verify(move |v| {
        let arm = find_arm(&m.scene.arms, &v[0].label).ok_or("unknown robot")?;
        let (method, yaw) = v[2].payload.contact().ok_or("not a contact")?;
        let (_, q) = v[3].payload.conf().ok_or("not a configuration")?;
        if reaches(arm, q, &m.twist_target(method, yaw)) {
            Ok(None)
        } else {
            Err("configuration does not reach the nut".into())
        }
    })
}

fn nut_ok_stream(model: &Arc<NutModel>) -> Stream<Val> {
    let m = model.clone();
    let check = Arc::new(move |v: &[&Value<Val>]| -> Result<Option<f64>, String> {
        let (method, yaw) = v[2].payload.contact().ok_or("not a contact")?;
        let (_, q) = v[3].payload.conf().ok_or("not a configuration")?;
        verdict_result(m.twist_chain(method, yaw, q).and_then(|c| Ok(chain_stable(&c, &m.wrench())?)))
    });
    let c2 = check.clone();
    Stream::new(
        "nut-ok",
        params(&[("?r", "robot"), ("?n", "object"), ("?c", "contact"), ("?q", "conf")]),
        Vec::new(),
        move |v, _, _| check(v).ok().map(|_| Vec::new()),
    )
    .domain(vec![atom("NutKin", &["?r", "?n", "?c", "?q"])])
    .certifies(vec![atom("NutOk", &["?r", "?n", "?c", "?q"])])
    .max_calls(1)
    .verify(move |v| c2(v))
}

fn beam_ik_stream(model: &Arc<NutModel>) -> Stream<Val> {
    let m = model.clone();
    let sample = move |v: &[&Value<Val>], rng: &mut ChaCha8Rng, _: u64| {
        let arm = find_arm(&m.scene.arms, &v[0].label)?;
        let q = solve_ik(arm, &m.beam_grasp_target(arm), rng, IK_RESTARTS)?;
        m.robot_fixture_chain(arm, &q)
            .and_then(|c| Ok(chain_stable(&c, &m.wrench())?))
            .ok()
            .filter(|v| v.stable)?;
        Some(vec![(format!("{}-qbeam", arm.name), Val::Conf { robot: arm.name.clone(), q })])
    };
    let m = model.clone();
    Stream::new("beam-ik", params(&[("?r", "robot"), ("?b", "object")]), params(&[("?q", "conf")]), sample)
        .domain(vec![atom("Fixturer", &["?r"]), atom("Beam", &["?b"])])
        .certifies(vec![atom("BeamHoldOk", &["?r", "?b", "?q"]), atom("Conf", &["?r", "?q"])])
        .max_calls(1)
        .verify(move |v| {
            let arm = find_arm(&m.scene.arms, &v[0].label).ok_or("unknown robot")?;
            let (_, q) = v[2].payload.conf().ok_or("not a configuration")?;
            if !reaches(arm, q, &m.beam_grasp_target(arm)) {
                return Err("configuration does not reach the beam".into());
            }
            verdict_result(m.robot_fixture_chain(arm, q).and_then(|c| Ok(chain_stable(&c, &m.wrench())?)))
        })
}

/// `finger+RF`, `spanner+weight(1 kg)` and so on.
pub fn strategy_label(plan: &Plan<Val>, model: &NutModel) -> Option<String> {
    let twist = plan
        .actions
        .iter()
        .find(|a| a.schema.starts_with("finger-twist-nut") || a.schema.starts_with("spanner-twist"))?;
    let method = if twist.schema.starts_with("spanner") { "spanner" } else { "finger" };
    if twist.schema.ends_with("-rf") {
        return Some(format!("{method}+RF"));
    }
    let (obj, _, _) = twist.args.get(8)?.payload.pose()?;
    let mass = model.weight_mass(obj)?;
    Some(format!("{method}+weight({mass} kg)"))
}

#[cfg(test)]
mod tests;
