use super::*;
use crate::planner::{solve, validate_plan, Budget};

fn model_on(start: StartSurface, disable: &[&str]) -> Arc<BottleModel> {
    let op = BottleOperation {
        disable: disable.iter().map(|s| s.to_string()).collect(),
        ..BottleOperation::default()
    };
    let scene = BottleScene {
        start,
        ..BottleScene::default()
    };
    Arc::new(BottleModel::new(scene, op).unwrap())
}

fn plan_for(start: StartSurface, disable: &[&str]) -> (Problem<Val>, Plan<Val>) {
    let p = model_on(start, disable).problem().unwrap();
    let plan = solve(&p, &Budget::default()).unwrap().plan;
    (p, plan)
}

fn check_row(start: StartSurface, disable: &[&str], label: &str, steps: usize) {
    let (p, plan) = plan_for(start, disable);
    assert_eq!(strategy_label(&plan).as_deref(), Some(label), "{disable:?}\n{plan}");
    assert_eq!(plan.len(), steps, "{disable:?}\n{plan}");
    let report = validate_plan(&p, &plan);
    assert!(report.violations.is_empty(), "{:?}", report.violations);
}

#[test]
fn grasp_twist_on_the_table() {
    check_row(StartSurface::Table, &["pt", "ft", "tt"], "GT+SF(T)", 4);
}

#[test]
fn slippery_table_calls_for_the_second_arm() {
    check_row(StartSurface::Table, &["pt", "ft", "tt", "sft"], "GT+RF", 6);
}

#[test]
fn one_arm_moves_the_bottle_to_the_mat() {
    check_row(StartSurface::Table, &["pt", "ft", "tt", "sft", "rf"], "GT+SF(M)", 8);
}

#[test]
fn without_the_mat_the_vise_is_used() {
    check_row(StartSurface::Table, &["pt", "ft", "tt", "sft", "rf", "sfm"], "GT+VF", 9);
}

#[test]
fn each_method_alone_on_the_mat() {
    check_row(StartSurface::Mat, &["pt", "ft"], "GT+SF(M)", 4);
    check_row(StartSurface::Mat, &["gt", "ft"], "PT+SF(M)", 4);
    check_row(StartSurface::Mat, &["gt", "pt"], "FT+SF(M)", 4);
    check_row(StartSurface::Mat, &["gt", "pt", "ft"], "TT+SF(M)", 8);
}

#[test]
fn same_seed_same_plan() {
    let a = plan_for(StartSurface::Table, &["pt", "ft", "tt", "sft"]).1;
    let b = plan_for(StartSurface::Table, &["pt", "ft", "tt", "sft"]).1;
    assert_eq!(a, b);
}

#[test]
fn table_friction_needs_a_hard_push() {
    let m = model_on(StartSurface::Table, &[]);
    let b = &m.scene.bottle;
    // Torsional capacity of a pressed disc: 0.6 r mu N.
    for f in m.force_grid() {
        let n = b.mass * GRAVITY + m.op.down_force + f;
        let holds = 0.6 * b.radius * m.scene.table.mu * n >= m.op.torque;
        assert_eq!(m.surface_eval("table", f).cost.is_finite(), holds, "f = {f}");
    }
    assert!(m.surface_eval("mat", 0.0).cost == 0.0);
    let slippery = model_on(StartSurface::Table, &["sft"]);
    assert!(slippery.surface_eval("table", slippery.scene.max_down_force).cost.is_infinite());
}

#[test]
fn weaker_push_than_certified_is_caught() {
    let (p, mut plan) = plan_for(StartSurface::Table, &["pt", "ft", "tt"]);
    let step = plan.actions.iter().position(|a| a.schema == "grasp-twist-sf").unwrap();
    let zero = p.values.iter().find(|v| v.label == "f0").unwrap().clone();
    let arg = plan.actions[step].args.iter().position(|v| v.ty == "force").unwrap();
    plan.actions[step].args[arg] = zero;
    let report = validate_plan(&p, &plan);
    assert!(report.violations.iter().any(|v| v.step == Some(step)), "{:?}", report.violations);
}

#[test]
fn loose_grip_cannot_twist() {
    let mut scene = BottleScene::default();
    scene.hand.mu = 0.1;
    let m = BottleModel::new(scene, BottleOperation::default()).unwrap();
    assert!(!m.contact_verdict(TwistMethod::Grasp, 0.0, 0.0).unwrap().stable);
    assert!(m.contact_verdict(TwistMethod::Palm, 0.0, m.scene.max_down_force).is_ok());
}

#[test]
fn wrist_flip_leaves_room_to_twist() {
    let m = model_on(StartSurface::Table, &[]);
    let arm = m.twister();
    let mut q = arm.home.clone();
    *q.0.last_mut().unwrap() = -2.6;
    let (q, qp) = m.with_twist_room(arm, q).unwrap();
    assert!(arm.model.within_limits(&q) && arm.model.within_limits(&qp));
    assert!((q.0[6] - qp.0[6] - m.op.twist_angle).abs() < 1e-12);
}

#[test]
fn disabling_every_method_leaves_nothing_to_plan() {
    let m = model_on(StartSurface::Table, &["gt", "pt", "ft", "tt"]);
    let p = m.problem().unwrap();
    assert!(solve(&p, &Budget { max_levels: 3, ..Budget::default() }).is_err());
}

#[test]
fn start_on_missing_mat_is_rejected() {
    let scene = BottleScene {
        start: StartSurface::Mat,
        mat: None,
        ..BottleScene::default()
    };
    assert!(matches!(
        BottleModel::new(scene, BottleOperation::default()),
        Err(DomainError::Missing(_))
    ));
}
