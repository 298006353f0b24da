use super::*;
use crate::planner::{solve, validate_plan, Budget};

fn model(two_arms: bool) -> Arc<NutModel> {
    let mut scene = NutScene::default();
    if two_arms {
        scene.arms.push(ArmPlacement::named("r2", [1.0, 0.0, 0.0, PI]));
    }
    Arc::new(NutModel::new(scene, NutOperation::default()).unwrap())
}

#[test]
fn operation_is_a_pure_twist_about_the_bolt() {
    let w = model(false).wrench();
    assert_eq!(w.frame.as_str(), "nut");
    let v = w.to_array();
    assert!(v[..5].iter().all(|x| *x == 0.0));
    assert_eq!(v[5], 0.5);
}

#[test]
fn one_arm_weighs_the_beam_down_with_the_middle_weight() {
    let m = model(false);
    let p = m.problem().unwrap();
    let plan = solve(&p, &Budget::default()).unwrap().plan;
    assert_eq!(strategy_label(&plan, &m).as_deref(), Some("finger+weight(1 kg)"), "{plan}");
    assert_eq!(plan.len(), 6, "{plan}");
    let report = validate_plan(&p, &plan);
    assert!(report.violations.is_empty(), "{:?}", report.violations);
    assert!((report.total_cost - plan.total_cost).abs() < 1e-9);
}

#[test]
fn second_arm_holds_the_beam() {
    let m = model(true);
    let p = m.problem().unwrap();
    let plan = solve(&p, &Budget::default()).unwrap().plan;
    assert_eq!(strategy_label(&plan, &m).as_deref(), Some("finger+RF"), "{plan}");
    assert_eq!(plan.len(), 4, "{plan}");
    let hold = plan.actions.iter().find(|a| a.schema == "fixture-grasp").unwrap();
    assert_eq!(hold.args[0].label, "r2");
    assert!(validate_plan(&p, &plan).violations.is_empty());
}

#[test]
fn heavier_weights_fixture_better_but_grasp_worse() {
    let m = model(false);
    let (lo, hi) = m.placement_range().unwrap();
    let s = (lo + hi) / 2.0;
    let ee = m.weight_grasp(0.0);
    let mut last: Option<(f64, f64)> = None;
    for mass in [0.2, 0.5, 1.0, 2.0, 4.0] {
        let fix = m.weight_fixture_eval(mass, s).cost;
        let grasp = m.grasp_eval(mass, &ee, &m.op.cost).cost;
        if let Some((f0, g0)) = last {
            assert!(fix <= f0, "fixture cost rose at {mass} kg");
            assert!(grasp >= g0, "grasp cost fell at {mass} kg");
        }
        last = Some((fix, grasp));
    }
}

#[test]
fn light_weight_cannot_stop_the_beam() {
    let m = model(false);
    let (lo, hi) = m.placement_range().unwrap();
    let c = m.weight_fixture_chain(Some((0.2, (lo + hi) / 2.0))).unwrap();
    assert!(!chain_stable(&c, &m.wrench()).unwrap().stable);
    let c = m.weight_fixture_chain(Some((1.0, (lo + hi) / 2.0))).unwrap();
    assert!(chain_stable(&c, &m.wrench()).unwrap().stable);
}

#[test]
fn weights_are_placed_clear_of_the_bolt() {
    let m = model(false);
    let (lo, hi) = m.placement_range().unwrap();
    assert!((lo - 0.06).abs() < 1e-12 && (hi - 0.26).abs() < 1e-12);
    assert!((m.along_beam(&m.beam_pose(0.1)) - 0.1).abs() < 1e-12);
    let scene = NutScene {
        weight_extent: 0.5,
        ..NutScene::default()
    };
    assert!(NutModel::new(scene, NutOperation::default()).is_err());
}

#[test]
fn rf_code_drops_the_second_arm() {
    let mut scene = NutScene::default();
    scene.arms.push(ArmPlacement::named("r2", [1.0, 0.0, 0.0, PI]));
    let op = NutOperation {
        disable: ["rf".to_string()].into(),
        ..NutOperation::default()
    };
    assert_eq!(NutModel::new(scene, op).unwrap().scene.arms.len(), 1);
}

#[test]
fn zero_torque_twist_is_trivially_stable() {
    use rand::SeedableRng;
    let op = NutOperation {
        torque: 0.0,
        ..NutOperation::default()
    };
    let m = NutModel::new(NutScene::default(), op).unwrap();
    assert!(m.wrench().to_array().iter().all(|x| *x == 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let q = super::super::solve_ik(m.twister(), &m.twist_target(TwistMethod::Grasp, 0.0), &mut rng, 20).unwrap();
    let c = m.twist_chain(TwistMethod::Grasp, 0.0, &q).unwrap();
    assert!(chain_stable(&c, &m.wrench()).unwrap().stable);
    assert_eq!(m.twist_eval(TwistMethod::Grasp, 0.0, &q).cost, 0.0);
    // nothing needs to hold the beam either
    assert!(chain_stable(&m.weight_fixture_chain(None).unwrap(), &m.wrench()).unwrap().stable);
}
