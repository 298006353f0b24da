use std::sync::Arc;

use forceful::domains::bottle::{strategy_label, BottleModel, BottleOperation};
use forceful::domains::scene::BottleScene;
use forceful::domains::CostModel;
use forceful::planner::{solve, validate_plan, Budget};
use forceful::robustness::{estimate, normal, plan_cost, sample_rng, PerturbationSpec};
use forceful::study::{bottle_twist_sweep, linspace};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

#[test]
fn estimate_is_a_per_sample_count_whatever_the_worker_count() {
    let spec = PerturbationSpec {
        sample_count: 4000,
        rng_seed: 11,
        ..PerturbationSpec::default()
    };
    let trial = |rng: &mut _| normal(rng) > 0.3;
    let serial = (0..spec.sample_count as u64)
        .filter(|&i| normal(&mut sample_rng(spec.rng_seed, i)) > 0.3)
        .count() as f64
        / spec.sample_count as f64;
    assert_eq!(pool(1).install(|| estimate(&spec, trial)), serial);
    assert_eq!(pool(4).install(|| estimate(&spec, trial)), serial);
}

#[test]
fn twist_sweep_does_not_depend_on_threads() {
    let model = BottleModel::new(BottleScene::default(), BottleOperation::default()).unwrap();
    let spec = PerturbationSpec::default().with_samples(200).with_seed(3);
    let forces = linspace(0.0, 40.0, 4);
    let one = pool(1).install(|| bottle_twist_sweep(&model, &forces, &spec).unwrap());
    let many = pool(3).install(|| bottle_twist_sweep(&model, &forces, &spec).unwrap());
    let key = |rows: &[forceful::study::SweepRow]| {
        rows.iter().map(|r| (r.method.clone(), r.probability.to_bits())).collect::<Vec<_>>()
    };
    assert_eq!(key(&one), key(&many));
}

#[test]
fn robust_costs_prefer_the_second_arm_to_table_friction() {
    let op = BottleOperation {
        cost: CostModel::Robust {
            perturbation: PerturbationSpec::default().with_samples(50),
        },
        ..BottleOperation::default()
    };
    let model = Arc::new(BottleModel::new(BottleScene::default(), op).unwrap());
    let problem = model.problem().unwrap();
    let plan = solve(&problem, &Budget::default()).unwrap().plan;
    assert_eq!(strategy_label(&plan).as_deref(), Some("GT+RF"));
    let costs: Vec<f64> = plan.actions.iter().map(|a| a.cost).collect();
    assert!(costs.iter().all(|c| c.is_finite() && *c >= 0.0));
    assert!((plan.total_cost - plan_cost(&costs)).abs() < 1e-12);
    let report = validate_plan(&problem, &plan);
    assert!(report.violations.is_empty(), "{:?}", report.violations);
    assert!((report.total_cost - plan.total_cost).abs() < 1e-9);
}
