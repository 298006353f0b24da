//! Planning domains for forceful manipulation: opening a childproof bottle
//! and twisting a nut off a bolt fixed to a loose beam.
//!
//! Both domains share the payload type [`Val`], the pick/place/move
//! schemas built by [`manipulation`] and a few geometric helpers.

pub mod bottle;
pub mod nut;
pub mod scene;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::{atom, params, ActionEval, ActionSchema, Stream, Value};
use crate::robot::{fk, ik_with, Config, IkOptions, RobotError};
use crate::robustness::{action_cost, success_probability, PerturbationSpec, RobustnessError};
use crate::spatial::{Transform, Wrench};
use crate::stability::{
    chain_stable, ArmJoint, ForcefulKinematicChain, Joint, JointModel, PolygonPatchJoint,
    StabilityError,
};

pub use scene::{ArmPlacement, BottleScene, HandSpec, NutScene, Region};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("scene is missing {0}")]
    Missing(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
}

/// How the hand turns the lid or nut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwistMethod {
    /// Parallel jaws squeeze the lid rim.
    Grasp,
    /// The palm presses down on the lid.
    Palm,
    /// Two fingertips press down on the lid.
    Finger,
    /// A hand-held driver presses down on the lid.
    Tool,
}

impl TwistMethod {
    pub const ALL: [TwistMethod; 4] = [
        TwistMethod::Grasp,
        TwistMethod::Palm,
        TwistMethod::Finger,
        TwistMethod::Tool,
    ];

    pub fn code(self) -> &'static str {
        match self {
            TwistMethod::Grasp => "GT",
            TwistMethod::Palm => "PT",
            TwistMethod::Finger => "FT",
            TwistMethod::Tool => "TT",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TwistMethod::Grasp => "grasp",
            TwistMethod::Palm => "palm",
            TwistMethod::Finger => "finger",
            TwistMethod::Tool => "tool",
        }
    }
}

/// Payload of every planner value in both domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Val {
    /// Robots, objects and regions: identified by label alone.
    Symbol,
    Wrench {
        wrench: Wrench,
    },
    /// World pose of an object's base frame.
    Pose {
        object: String,
        region: String,
        pose: Transform,
    },
    /// End-effector pose in the object frame. `offset` records the sampled
    /// grasp parameter (approach angle or slide along the object).
    Grasp {
        object: String,
        ee: Transform,
        offset: f64,
    },
    /// Where the hand meets the lid or nut, as a yaw about its axis.
    Contact {
        method: TwistMethod,
        yaw: f64,
    },
    Conf {
        robot: String,
        q: Config,
    },
    Traj {
        robot: String,
        path: Vec<Config>,
    },
    /// Extra downward force on top of the operation's own.
    Force {
        newtons: f64,
    },
}

impl Val {
    pub fn pose(&self) -> Option<(&str, &str, &Transform)> {
        match self {
            Val::Pose {
                object,
                region,
                pose,
            } => Some((object, region, pose)),
            _ => None,
        }
    }

    pub fn grasp(&self) -> Option<(&str, &Transform, f64)> {
        match self {
            Val::Grasp { object, ee, offset } => Some((object, ee, *offset)),
            _ => None,
        }
    }

    pub fn conf(&self) -> Option<(&str, &Config)> {
        match self {
            Val::Conf { robot, q } => Some((robot, q)),
            _ => None,
        }
    }

    pub fn contact(&self) -> Option<(TwistMethod, f64)> {
        match self {
            Val::Contact { method, yaw } => Some((*method, *yaw)),
            _ => None,
        }
    }

    pub fn force(&self) -> Option<f64> {
        match self {
            Val::Force { newtons } => Some(*newtons),
            _ => None,
        }
    }

    pub fn wrench(&self) -> Option<&Wrench> {
        match self {
            Val::Wrench { wrench } => Some(wrench),
            _ => None,
        }
    }
}

/// A wrench to exert on a target object, which some other body must hold
/// still while it is exerted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcefulOperation {
    /// Expressed in the target object's frame.
    pub wrench: Wrench,
    pub fixture_target: String,
}

/// How a stability check turns into an action cost.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CostModel {
    /// Stable chains cost nothing, unstable ones are excluded.
    #[default]
    Feasibility,
    /// `-ln p` of the Monte-Carlo success probability.
    Robust { perturbation: PerturbationSpec },
}

/// Nominal verdict plus cost of exerting `w` through `chain`.
pub fn chain_eval(
    chain: &ForcefulKinematicChain,
    w: &Wrench,
    model: &CostModel,
) -> Result<ActionEval, DomainError> {
    let v = chain_stable(chain, w)?;
    let cost = match model {
        CostModel::Feasibility => {
            if v.stable {
                0.0
            } else {
                f64::INFINITY
            }
        }
        CostModel::Robust { perturbation } => {
            let p = success_probability(chain, w, perturbation)?;
            action_cost(p)?.cost
        }
    };
    Ok(ActionEval {
        cost,
        margin: Some(v.margin),
    })
}

/// Sums the costs of independent checks; the margin is the smallest one.
pub fn combine(evals: &[ActionEval]) -> ActionEval {
    let cost = evals.iter().map(|e| e.cost).sum();
    let margin = evals
        .iter()
        .filter_map(|e| e.margin)
        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));
    ActionEval { cost, margin }
}

pub(crate) const INFEASIBLE: ActionEval = ActionEval {
    cost: f64::INFINITY,
    margin: None,
};

/// End-effector pose with the tool axis pointing straight down and the
/// jaw axis (`x`) at world yaw `yaw`.
pub fn ee_down(position: Vector3<f64>, yaw: f64) -> Transform {
    let r = Transform::rot_z(yaw).compose(&Transform::rot_x(PI));
    Transform::new(r.rotation, position)
}

/// World pose of an arm's end effector.
pub fn world_ee(arm: &ArmPlacement, q: &Config) -> Result<Transform, RobotError> {
    Ok(arm.base_pose().compose(&fk(&arm.model, q)?))
}

/// Damped least-squares IK from the home configuration, then from
/// `restarts` randomly perturbed home configurations.
pub fn solve_ik(
    arm: &ArmPlacement,
    target_world: &Transform,
    rng: &mut ChaCha8Rng,
    restarts: usize,
) -> Option<Config> {
    let target = arm.base_pose().inverse().compose(target_world);
    let opts = IkOptions::default();
    let n = arm.model.dof();
    for k in 0..=restarts {
        let seed = if k == 0 {
            arm.home.clone()
        } else {
            Config(
                (0..n)
                    .map(|i| arm.home.0[i] + 0.6 * (rng.random::<f64>() - 0.5) * 2.0)
                    .collect(),
            )
        };
        if let Ok(q) = ik_with(&arm.model, &target, &seed, &opts) {
            if arm.model.within_limits(&q) {
                return Some(q);
            }
        }
    }
    None
}

/// Whether `q` puts the end effector at `target_world`.
pub fn reaches(arm: &ArmPlacement, q: &Config, target_world: &Transform) -> bool {
    arm.model.within_limits(q)
        && world_ee(arm, q).is_ok_and(|ee| ee.approx_eq(target_world, 1e-3))
}

/// Joint-space straight line; limits are a box, so endpoints inside the
/// limits keep every waypoint inside.
pub fn straight_path(arm: &ArmPlacement, q1: &Config, q2: &Config, waypoints: usize) -> Option<Vec<Config>> {
    if !arm.model.within_limits(q1) || !arm.model.within_limits(q2) {
        return None;
    }
    let n = waypoints.max(2);
    Some(
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    return q2.clone();
                }
                let s = i as f64 / (n - 1) as f64;
                Config(q1.0.iter().zip(&q2.0).map(|(a, b)| a + s * (b - a)).collect())
            })
            .collect(),
    )
}

/// Arm joint of a chain whose application frame sits at `world_app`. The
/// arm's test frame is at the end-effector point with base-aligned axes.
pub fn arm_link(arm: &ArmPlacement, q: &Config, world_app: &Transform) -> Result<(Joint, Transform), DomainError> {
    let ee = world_ee(arm, q)?;
    let base = arm.base_pose();
    let rt = base.rotation.transpose();
    let t = Transform::new(
        rt * world_app.rotation,
        rt * (world_app.translation - ee.translation),
    );
    let joint = Joint::new(
        format!("{}-arm", arm.name),
        format!("{}-ee", arm.name),
        JointModel::Arm(ArmJoint {
            arm: Arc::new(arm.model.clone()),
            q: q.clone(),
        }),
    );
    Ok((joint, t))
}

/// Two parallel jaws squeezing an object, lumped into one square patch at
/// the grasp center. The patch normal is the closing direction, so the
/// object's weight loads the patch tangentially and an off-center grasp
/// twists it about the normal. Each corner carries half the grip force.
pub fn jaw_patch(hand: &HandSpec, mu: f64) -> Result<PolygonPatchJoint, StabilityError> {
    let h = hand.pad_size / 2.0;
    PolygonPatchJoint::new(
        mu,
        vec![
            Vector3::new(-h, -h, 0.0),
            Vector3::new(-h, h, 0.0),
            Vector3::new(h, -h, 0.0),
            Vector3::new(h, h, 0.0),
        ],
        vec![hand.grip_force / 2.0; 4],
    )
}

/// Stability chain of an object hanging in a jaw grasp. The application
/// frame is the object's center of mass, axis-aligned with the object
/// frame; `com` and `ee` are expressed in the object frame and the jaws
/// close along the end effector's `y` axis.
pub fn hanging_grasp_chain(
    hand: &HandSpec,
    com: Vector3<f64>,
    ee: &Transform,
) -> Result<ForcefulKinematicChain, DomainError> {
    // patch z along the jaw axis, x along the end effector's x
    let pad_in_ee = Transform::rot_x(-PI / 2.0);
    let obj_pad = ee.compose(&pad_in_ee);
    let pad_com = obj_pad.inverse().compose(&Transform::new(nalgebra::Matrix3::identity(), com));
    Ok(ForcefulKinematicChain::new("com").with_joint(
        Joint::new("jaws", "jaws", JointModel::PolygonPatch(jaw_patch(hand, hand.mu)?)),
        pad_com,
    ))
}

/// Weight of `mass` at the center of mass, in an object-aligned frame at
/// world yaw only (gravity along `-z`).
pub fn gravity_wrench(mass: f64, object_world: &Transform) -> Wrench {
    let g = object_world.rotation.transpose() * Vector3::new(0.0, 0.0, -mass * crate::stability::GRAVITY);
    Wrench::new(g, Vector3::zeros(), "com")
}

/// Names of arms that can move, pick and place.
pub(crate) fn arm_values(arms: &[ArmPlacement]) -> (Vec<Value<Val>>, Vec<crate::planner::Atom>) {
    let mut values = Vec::new();
    let mut init = Vec::new();
    for a in arms {
        let home = format!("{}-home", a.name);
        values.push(Value::new(&a.name, "robot", Val::Symbol));
        values.push(Value::new(
            &home,
            "conf",
            Val::Conf {
                robot: a.name.clone(),
                q: a.home.clone(),
            },
        ));
        init.push(atom("Arm", &[&a.name]));
        init.push(atom("Conf", &[&a.name, &home]));
        init.push(atom("AtConf", &[&a.name, &home]));
        init.push(atom("HandEmpty", &[&a.name]));
    }
    (values, init)
}

pub(crate) fn find_arm<'a>(arms: &'a [ArmPlacement], name: &str) -> Option<&'a ArmPlacement> {
    arms.iter().find(|a| a.name == name)
}

/// Cost of picking an object with a grasp, from its pose and grasp values.
pub type GraspCostFn = Arc<dyn Fn(&Val, &Val) -> ActionEval + Send + Sync>;

pub(crate) const IK_RESTARTS: usize = 6;

/// `move`, `move-holding`, `pick` and `place` with the `pick-ik` and
/// `motion` streams. `pick` is charged `grasp_cost(grasp, pose)`.
pub(crate) fn manipulation(
    arms: Arc<Vec<ArmPlacement>>,
    grasp_cost: GraspCostFn,
) -> (Vec<ActionSchema<Val>>, Vec<Stream<Val>>) {
    let mv = ActionSchema::new(
        "move",
        params(&[("?r", "robot"), ("?q1", "conf"), ("?q2", "conf"), ("?t", "traj")]),
    )
    .pre(vec![
        atom("Motion", &["?r", "?q1", "?q2", "?t"]),
        atom("AtConf", &["?r", "?q1"]),
        atom("HandEmpty", &["?r"]),
    ])
    .add(vec![atom("AtConf", &["?r", "?q2"])])
    .del(vec![atom("AtConf", &["?r", "?q1"])]);

    let mv_holding = ActionSchema::new(
        "move-holding",
        params(&[
            ("?r", "robot"),
            ("?o", "object"),
            ("?g", "grasp"),
            ("?q1", "conf"),
            ("?q2", "conf"),
            ("?t", "traj"),
        ]),
    )
    .pre(vec![
        atom("Motion", &["?r", "?q1", "?q2", "?t"]),
        atom("AtConf", &["?r", "?q1"]),
        atom("Holding", &["?r", "?o", "?g"]),
    ])
    .add(vec![atom("AtConf", &["?r", "?q2"])])
    .del(vec![atom("AtConf", &["?r", "?q1"])]);

    let kin_params = params(&[
        ("?r", "robot"),
        ("?o", "object"),
        ("?g", "grasp"),
        ("?p", "pose"),
        ("?q", "conf"),
    ]);
    let pick = ActionSchema::new("pick", kin_params.clone())
        .pre(vec![
            atom("Kin", &["?r", "?o", "?g", "?p", "?q"]),
            atom("AtPose", &["?o", "?p"]),
            atom("AtConf", &["?r", "?q"]),
            atom("HandEmpty", &["?r"]),
        ])
        .add(vec![atom("Holding", &["?r", "?o", "?g"])])
        .del(vec![atom("AtPose", &["?o", "?p"]), atom("HandEmpty", &["?r"])])
        .eval(move |v| grasp_cost(&v[2].payload, &v[3].payload));

    let place = ActionSchema::new("place", kin_params)
        .pre(vec![
            atom("Kin", &["?r", "?o", "?g", "?p", "?q"]),
            atom("Holding", &["?r", "?o", "?g"]),
            atom("AtConf", &["?r", "?q"]),
        ])
        .add(vec![atom("AtPose", &["?o", "?p"]), atom("HandEmpty", &["?r"])])
        .del(vec![atom("Holding", &["?r", "?o", "?g"])]);

    let a = arms.clone();
    let pick_ik = Stream::new(
        "pick-ik",
        params(&[("?r", "robot"), ("?o", "object"), ("?g", "grasp"), ("?p", "pose")]),
        params(&[("?q", "conf")]),
        move |v, rng, _| {
            let arm = find_arm(&a, &v[0].label)?;
            let target = grasp_target(&v[2].payload, &v[3].payload)?;
            let q = solve_ik(arm, &target, rng, IK_RESTARTS)?;
            Some(vec![(format!("{}-q", arm.name), Val::Conf { robot: arm.name.clone(), q })])
        },
    )
    .domain(vec![
        atom("Arm", &["?r"]),
        atom("Grasp", &["?o", "?g"]),
        atom("Pose", &["?o", "?p"]),
    ])
    .certifies(vec![
        atom("Kin", &["?r", "?o", "?g", "?p", "?q"]),
        atom("Conf", &["?r", "?q"]),
    ])
    .max_calls(1);
    let a = arms.clone();
    let pick_ik = pick_ik.verify(move |v| {
        let arm = find_arm(&a, &v[0].label).ok_or("unknown robot")?;
        let target = grasp_target(&v[2].payload, &v[3].payload).ok_or("grasp and pose disagree")?;
        let (robot, q) = v[4].payload.conf().ok_or("not a configuration")?;
        if robot == arm.name && reaches(arm, q, &target) {
            Ok(None)
        } else {
            Err("configuration does not reach the grasp".into())
        }
    });

    let motion = motion_stream(arms);
    (vec![mv, mv_holding, pick, place], vec![pick_ik, motion])
}

/// World end-effector pose for `grasp` of an object at `pose`.
pub(crate) fn grasp_target(grasp: &Val, pose: &Val) -> Option<Transform> {
    let (go, ee, _) = grasp.grasp()?;
    let (po, _, p) = pose.pose()?;
    (go == po).then(|| p.compose(ee))
}

fn motion_stream(arms: Arc<Vec<ArmPlacement>>) -> Stream<Val> {
    let a = arms.clone();
    Stream::new(
        "motion",
        params(&[("?r", "robot"), ("?q1", "conf"), ("?q2", "conf")]),
        params(&[("?t", "traj")]),
        move |v: &[&Value<Val>], _: &mut ChaCha8Rng, _: u64| {
            if v[1].label == v[2].label {
                return None;
            }
            let arm = find_arm(&a, &v[0].label)?;
            let (_, q1) = v[1].payload.conf()?;
            let (_, q2) = v[2].payload.conf()?;
            let path = straight_path(arm, q1, q2, 5)?;
            Some(vec![(format!("{}-t", arm.name), Val::Traj { robot: arm.name.clone(), path })])
        },
    )
    .domain(vec![
        atom("Arm", &["?r"]),
        atom("Conf", &["?r", "?q1"]),
        atom("Conf", &["?r", "?q2"]),
    ])
    .certifies(vec![atom("Motion", &["?r", "?q1", "?q2", "?t"])])
    .max_calls(1)
    .verify(move |v| {
        let arm = find_arm(&arms, &v[0].label).ok_or("unknown robot")?;
        let (_, q1) = v[1].payload.conf().ok_or("not a configuration")?;
        let (_, q2) = v[2].payload.conf().ok_or("not a configuration")?;
        let Val::Traj { path, .. } = &v[3].payload else {
            return Err("not a trajectory".into());
        };
        let ends = path.first() == Some(q1) && path.last() == Some(q2);
        if ends && path.iter().all(|q| arm.model.within_limits(q)) {
            Ok(None)
        } else {
            Err("trajectory does not connect the configurations within limits".into())
        }
    })
}

/// Strategy codes that can be switched off to force longer strategies.
pub const DISABLE_CODES: [&str; 8] = ["gt", "pt", "ft", "tt", "sft", "sfm", "rf", "vf"];

pub fn parse_disable(list: &[String]) -> Result<BTreeSet<String>, DomainError> {
    let mut out = BTreeSet::new();
    for s in list {
        let s = s.trim().to_ascii_lowercase();
        if s.is_empty() {
            continue;
        }
        if !DISABLE_CODES.contains(&s.as_str()) {
            return Err(DomainError::Invalid(format!(
                "unknown strategy code {s:?} (expected one of {})",
                DISABLE_CODES.join(", ")
            )));
        }
        out.insert(s);
    }
    Ok(out)
}

/// Yaw sequence used by deterministic samplers: a few canonical angles,
/// then uniform draws.
pub(crate) fn yaw_sample(attempt: u64, canonical: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    match canonical.get(attempt as usize) {
        Some(y) => *y,
        None => rng.random_range(-PI..PI),
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    use super::*;
    use crate::stability::GRAVITY;

    #[test]
    fn ik_reaches_a_top_down_pose() {
        let arm = ArmPlacement::default();
        let target = ee_down(Vector3::new(0.5, 0.05, 0.15), 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q = solve_ik(&arm, &target, &mut rng, IK_RESTARTS).expect("reachable");
        assert!(reaches(&arm, &q, &target));
    }

    #[test]
    fn mirrored_arm_reaches_the_same_point() {
        let arm = ArmPlacement::named("r2", [1.0, 0.0, 0.0, PI]);
        let target = ee_down(Vector3::new(0.5, 0.05, 0.15), PI);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = solve_ik(&arm, &target, &mut rng, IK_RESTARTS).expect("reachable");
        assert!(reaches(&arm, &q, &target));
    }

    #[test]
    fn hanging_grasp_sees_weight_and_offset_torsion() {
        let hand = HandSpec {
            grip_force: 30.0,
            ..HandSpec::default()
        };
        let com = Vector3::new(0.0, 0.0, 0.02);
        let delta = 0.01;
        let ee = ee_down(Vector3::new(delta, 0.0, 0.02), 0.0);
        let chain = hanging_grasp_chain(&hand, com, &ee).unwrap();
        let w = gravity_wrench(1.0, &Transform::identity());
        let link = &chain.links[0];
        let local = w.transformed(&link.transform, "jaws").to_array();
        // weight is tangential to the jaws, the offset twists about the normal
        assert_abs_diff_eq!(local[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(local[0].hypot(local[1]), GRAVITY, epsilon = 1e-12);
        assert_abs_diff_eq!(local[5].abs(), GRAVITY * delta, epsilon = 1e-12);
        assert_abs_diff_eq!(local[3], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(local[4], 0.0, epsilon = 1e-12);
        assert!(chain_stable(&chain, &w).unwrap().stable);
    }

    #[test]
    fn feasibility_cost_is_zero_or_infinite() {
        let hand = HandSpec::default();
        let chain = hanging_grasp_chain(&hand, Vector3::zeros(), &ee_down(Vector3::zeros(), 0.0)).unwrap();
        let light = chain_eval(&chain, &gravity_wrench(1.0, &Transform::identity()), &CostModel::Feasibility).unwrap();
        assert_eq!(light.cost, 0.0);
        let heavy = chain_eval(&chain, &gravity_wrench(50.0, &Transform::identity()), &CostModel::Feasibility).unwrap();
        assert!(heavy.cost.is_infinite());
        assert!(heavy.margin.unwrap() < 0.0);
    }

    #[test]
    fn unknown_disable_code_is_rejected() {
        assert!(parse_disable(&["sft".into(), "RF".into()]).is_ok());
        assert!(parse_disable(&["xx".into()]).is_err());
    }
}
