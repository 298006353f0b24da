//! Browser bindings. Each export takes plain numbers or strings and returns
//! a JSON string; errors come back as `{"error": "..."}`.

use std::sync::Arc;

use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

use forceful::domains::bottle::{strategy_label, BottleModel, BottleOperation};
use forceful::domains::parse_disable;
use forceful::domains::scene::{BottleScene, StartSurface};
use forceful::planner::{solve, validate_plan, Budget};
use forceful::robustness::PerturbationSpec;
use forceful::stability::{limit_surface_stable, CircularPatchJoint};
use forceful::study::{bottle_twist_sweep, linspace};

fn reply<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

#[derive(Debug, Serialize)]
pub struct ContactReport {
    pub stable: bool,
    pub margin: f64,
    /// Largest planar torque the patch holds with no tangential force.
    pub max_torque: f64,
}

pub fn contact(mu: f64, radius: f64, normal: f64, fx: f64, fy: f64, mz: f64) -> Result<ContactReport, String> {
    let joint = CircularPatchJoint::new(mu, radius, normal).map_err(|e| e.to_string())?;
    let v = limit_surface_stable([fx, fy, mz], &joint);
    Ok(ContactReport {
        stable: v.stable,
        margin: v.margin,
        max_torque: mu * normal * joint.k(),
    })
}

#[derive(Debug, Serialize)]
pub struct CostPoint {
    pub force: f64,
    pub method: String,
    pub probability: f64,
    pub cost: f64,
}

pub fn twist_costs(max_force: f64, steps: usize, samples: usize, seed: u64) -> Result<Vec<CostPoint>, String> {
    if !(max_force >= 0.0) || steps == 0 || steps > 50 || samples == 0 || samples > 5000 {
        return Err("need max_force >= 0, 1..=50 steps and 1..=5000 samples".into());
    }
    let model = BottleModel::new(BottleScene::default(), BottleOperation::default()).map_err(|e| e.to_string())?;
    let spec = PerturbationSpec {
        sample_count: samples,
        rng_seed: seed,
        ..PerturbationSpec::default()
    };
    let rows = bottle_twist_sweep(&model, &linspace(0.0, max_force, steps), &spec).map_err(|e| e.to_string())?;
    Ok(rows
        .into_iter()
        .map(|r| CostPoint {
            force: r.sweep_value,
            method: r.method,
            probability: r.probability,
            cost: r.cost,
        })
        .collect())
}

#[derive(Debug, Serialize)]
pub struct Step {
    pub schema: String,
    pub args: Vec<String>,
    pub cost: f64,
    pub margin: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct PlanReport {
    pub strategy: String,
    pub steps: Vec<Step>,
    pub total_cost: f64,
    pub valid: bool,
}

/// `disable` is a comma-separated list of strategy codes.
pub fn plan_bottle(disable: &str, on_mat: bool, seed: u64) -> Result<PlanReport, String> {
    let codes: Vec<String> = disable.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    let op = BottleOperation {
        disable: parse_disable(&codes).map_err(|e| e.to_string())?,
        ..BottleOperation::default()
    };
    let scene = BottleScene {
        start: if on_mat { StartSurface::Mat } else { StartSurface::Table },
        ..BottleScene::default()
    };
    let model = Arc::new(BottleModel::new(scene, op).map_err(|e| e.to_string())?);
    let problem = model.problem().map_err(|e| e.to_string())?;
    let budget = Budget {
        seed,
        time_limit: 20.0,
        ..Budget::default()
    };
    let plan = solve(&problem, &budget).map_err(|e| e.to_string())?.plan;
    let valid = validate_plan(&problem, &plan).violations.is_empty();
    Ok(PlanReport {
        strategy: strategy_label(&plan).unwrap_or_else(|| "?".into()),
        steps: plan
            .actions
            .iter()
            .map(|a| Step {
                schema: a.schema.clone(),
                args: a.args.iter().map(|v| v.label.clone()).collect(),
                cost: a.cost,
                margin: a.margin,
            })
            .collect(),
        total_cost: plan.total_cost,
        valid,
    })
}

#[wasm_bindgen(js_name = contactCheck)]
pub fn contact_check(mu: f64, radius: f64, normal: f64, fx: f64, fy: f64, mz: f64) -> String {
    reply(contact(mu, radius, normal, fx, fy, mz))
}

#[wasm_bindgen(js_name = twistCostSweep)]
pub fn twist_cost_sweep(max_force: f64, steps: u32, samples: u32, seed: u32) -> String {
    reply(twist_costs(max_force, steps as usize, samples as usize, seed as u64))
}

#[wasm_bindgen(js_name = solveBottle)]
pub fn solve_bottle(disable: &str, on_mat: bool, seed: u32) -> String {
    reply(plan_bottle(disable, on_mat, seed as u64))
}
