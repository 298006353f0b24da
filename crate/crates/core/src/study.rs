//! Batch experiments on the two domains: strategy ablations, where shorter
//! strategies are switched off one after another, and cost sweeps over the
//! downward force (bottle) or the weight mass (nut).

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::domains::bottle::{self, BottleModel, BottleOperation};
use crate::domains::nut::NutModel;
use crate::domains::scene::{BottleScene, StartSurface};
use crate::domains::{gravity_wrench, solve_ik, DomainError, Val, IK_RESTARTS};
use crate::planner::{solve, Budget, Plan};
use crate::robustness::{action_cost, success_probability, PerturbationSpec};
use crate::spatial::{Transform, Wrench};
use crate::stability::{chain_stable, ForcefulKinematicChain};

/// One row of an ablation: the strategy it is meant to force and the codes
/// switched off to force it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AblationCase {
    pub strategy: &'static str,
    pub disable: &'static [&'static str],
}

/// Bottle on the table, grasp twisting only; fixtures removed in turn.
pub const ABLATION_A1: [AblationCase; 4] = [
    AblationCase { strategy: "GT+SF(T)", disable: &["pt", "ft", "tt"] },
    AblationCase { strategy: "GT+RF", disable: &["pt", "ft", "tt", "sft"] },
    AblationCase { strategy: "GT+SF(M)", disable: &["pt", "ft", "tt", "sft", "rf"] },
    AblationCase { strategy: "GT+VF", disable: &["pt", "ft", "tt", "sft", "rf", "sfm"] },
];

/// Bottle on the mat; one twisting method at a time.
pub const ABLATION_A2: [AblationCase; 4] = [
    AblationCase { strategy: "GT+SF(M)", disable: &["pt", "ft", "tt"] },
    AblationCase { strategy: "PT+SF(M)", disable: &["gt", "ft", "tt"] },
    AblationCase { strategy: "FT+SF(M)", disable: &["gt", "pt", "tt"] },
    AblationCase { strategy: "TT+SF(M)", disable: &["gt", "pt", "ft"] },
];

/// The ablation that fits a scene: A1 when the bottle starts on the table.
pub fn default_ablation(scene: &BottleScene) -> &'static [AblationCase; 4] {
    match scene.start {
        StartSurface::Table => &ABLATION_A1,
        StartSurface::Mat => &ABLATION_A2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    /// The strategy found, or the one the case aimed for when unsolved.
    pub strategy: String,
    pub steps: usize,
    pub solved: bool,
    pub cost: f64,
    /// Seconds.
    pub wall_time: f64,
    pub plan: Option<Plan<Val>>,
}

/// Solves the scene once per case, with the case's codes added to
/// `op.disable`.
pub fn run_ablation(
    scene: &BottleScene,
    op: &BottleOperation,
    budget: &Budget,
    cases: &[AblationCase],
) -> Vec<AblationRow> {
    cases
        .iter()
        .map(|case| {
            let mut op = op.clone();
            op.disable.extend(case.disable.iter().map(|s| s.to_string()));
            let start = Instant::now();
            let plan = BottleModel::new(scene.clone(), op)
                .ok()
                .and_then(|m| Arc::new(m).problem().ok())
                .and_then(|p| solve(&p, budget).ok())
                .map(|s| s.plan);
            let wall_time = start.elapsed().as_secs_f64();
            match plan {
                Some(plan) => AblationRow {
                    strategy: bottle::strategy_label(&plan).unwrap_or_else(|| "?".into()),
                    steps: plan.len(),
                    solved: true,
                    cost: plan.total_cost,
                    wall_time,
                    plan: Some(plan),
                },
                None => AblationRow {
                    strategy: case.strategy.into(),
                    steps: 0,
                    solved: false,
                    cost: f64::INFINITY,
                    wall_time,
                    plan: None,
                },
            }
        })
        .collect()
}

/// Median and central 95% range of per-sample costs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub method: String,
    pub probability: f64,
    pub cost: f64,
    pub spread: Option<Spread>,
}

/// `steps` evenly spaced values from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        n => (0..n)
            .map(|i| if i == n - 1 { max } else { min + (max - min) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Linearly interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let x = q * (sorted.len() - 1) as f64;
    let (i, frac) = (x.floor() as usize, x.fract());
    let a = sorted[i];
    if frac == 0.0 || i + 1 == sorted.len() {
        return a;
    }
    let b = sorted[i + 1];
    if a == b {
        a
    } else {
        a + frac * (b - a)
    }
}

fn spread(mut costs: Vec<f64>) -> Spread {
    costs.sort_by(f64::total_cmp);
    Spread {
        median: quantile(&costs, 0.5),
        lo: quantile(&costs, 0.025),
        hi: quantile(&costs, 0.975),
    }
}

fn row(
    sweep_value: f64,
    method: &str,
    chain: &ForcefulKinematicChain,
    w: &Wrench,
    spec: &PerturbationSpec,
) -> Result<SweepRow, DomainError> {
    let p = success_probability(chain, w, spec)?;
    Ok(SweepRow {
        sweep_value,
        method: method.into(),
        probability: p,
        cost: action_cost(p)?.cost,
        spread: None,
    })
}

/// Cost of each twisting method's hand contacts against the extra push.
pub fn bottle_twist_sweep(
    model: &BottleModel,
    forces: &[f64],
    spec: &PerturbationSpec,
) -> Result<Vec<SweepRow>, DomainError> {
    let mut out = Vec::new();
    for &f in forces {
        for &method in &model.methods {
            let chain = model.contact_chain(method, 0.0, f)?;
            out.push(row(f, method.code(), &chain, &model.wrench(f), spec)?);
        }
    }
    Ok(out)
}

/// Cost of each way of holding the bottle against the extra push. The
/// robot fixture uses the second arm's side grasp with the most torque to
/// spare at the largest force.
pub fn bottle_fixture_sweep(
    model: &BottleModel,
    forces: &[f64],
    spec: &PerturbationSpec,
) -> Result<Vec<SweepRow>, DomainError> {
    let s = &model.scene;
    let bottle = match model.start_pose() {
        Val::Pose { pose, .. } => pose,
        _ => Transform::identity(),
    };
    let fmax = forces.iter().copied().fold(0.0, f64::max);
    let mut fixer = None;
    if let Some(arm) = s.arms.get(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
        let mut best = f64::NEG_INFINITY;
        for k in 0..8 {
            let theta = k as f64 * std::f64::consts::FRAC_PI_4;
            let target = bottle.compose(&model.bottle_grasp(theta));
            let Some(q) = solve_ik(arm, &target, &mut rng, IK_RESTARTS) else {
                continue;
            };
            let chain = model.robot_fixture_chain(arm, &q, &bottle)?;
            let margin = chain_stable(&chain, &model.wrench(fmax))?.margin;
            if margin > best {
                best = margin;
                fixer = Some(chain);
            }
        }
    }
    let mut out = Vec::new();
    for &f in forces {
        let w = model.wrench(f);
        out.push(row(f, "SF(T)", &model.surface_chain(s.table.mu, f)?, &w, spec)?);
        if let Some(mat) = &s.mat {
            out.push(row(f, "SF(M)", &model.surface_chain(mat.mu, f)?, &w, spec)?);
        }
        if let Some(chain) = &fixer {
            out.push(row(f, "RF", chain, &w, spec)?);
        }
        if s.vise.is_some() {
            out.push(row(f, "VF", &model.vise_chain(), &w, spec)?);
        }
    }
    Ok(out)
}

/// Fixture and grasp costs of a weight of each mass. Every mass sees the
/// same `placements` draws of position on the beam and grasp offset; the
/// probability column averages over them and the spread summarises the
/// per-placement costs.
pub fn nut_mass_sweep(
    model: &NutModel,
    masses: &[f64],
    spec: &PerturbationSpec,
    placements: usize,
) -> Result<Vec<SweepRow>, DomainError> {
    let (lo, hi) = model
        .placement_range()
        .ok_or_else(|| DomainError::Invalid("no room for a weight on the beam".into()))?;
    let r = model.scene.grasp_offset;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed ^ 0x5eed_0f_fa11);
    let draws: Vec<(f64, f64)> = (0..placements.max(1))
        .map(|_| {
            let side = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let s = side * rng.random_range(lo..=hi);
            let g = if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
            (s, g)
        })
        .collect();
    let summarise = |mass: f64, method: &str, ps: Vec<f64>| -> Result<SweepRow, DomainError> {
        let p = ps.iter().sum::<f64>() / ps.len() as f64;
        let costs = ps.iter().map(|&p| action_cost(p).map(|c| c.cost)).collect::<Result<Vec<_>, _>>()?;
        Ok(SweepRow {
            sweep_value: mass,
            method: method.into(),
            probability: p,
            cost: action_cost(p)?.cost,
            spread: Some(spread(costs)),
        })
    };
    let mut out = Vec::new();
    for &mass in masses {
        let mut fix = Vec::with_capacity(draws.len());
        let mut grasp = Vec::with_capacity(draws.len());
        for &(s, g) in &draws {
            let chain = model.weight_fixture_chain(Some((mass, s)))?;
            fix.push(success_probability(&chain, &model.wrench(), spec)?);
            let chain = model.grasp_chain(&model.weight_grasp(g))?;
            grasp.push(success_probability(&chain, &gravity_wrench(mass, &Transform::identity()), spec)?);
        }
        out.push(summarise(mass, "fixture", fix)?);
        out.push(summarise(mass, "grasp", grasp)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::nut::NutOperation;
    use crate::domains::scene::NutScene;

    #[test]
    fn linspace_includes_both_ends() {
        assert_eq!(linspace(0.0, 40.0, 5), vec![0.0, 10.0, 20.0, 30.0, 40.0]);
        assert_eq!(linspace(2.0, 3.0, 1), vec![2.0]);
        assert!(linspace(0.0, 1.0, 0).is_empty());
        assert_eq!(*linspace(0.2, 4.0, 4).last().unwrap(), 4.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.5), 2.5);
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 1.0), 4.0);
        let inf = [0.0, f64::INFINITY, f64::INFINITY];
        assert_eq!(quantile(&inf, 0.975), f64::INFINITY);
    }

    #[test]
    fn ablation_rows_report_unsolvable_cases() {
        let scene = BottleScene {
            vise: None,
            ..BottleScene::default()
        };
        let rows = run_ablation(&scene, &BottleOperation::default(), &Budget::default(), &ABLATION_A1[3..]);
        assert!(!rows[0].solved);
        assert_eq!(rows[0].strategy, "GT+VF");
    }

    #[test]
    fn fixture_sweep_has_every_fixture() {
        let m = BottleModel::new(BottleScene::default(), BottleOperation::default()).unwrap();
        let spec = PerturbationSpec::default().with_samples(50);
        let rows = bottle_fixture_sweep(&m, &[0.0, 40.0], &spec).unwrap();
        let methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(methods, ["SF(T)", "SF(M)", "RF", "VF", "SF(T)", "SF(M)", "RF", "VF"]);
    }

    #[test]
    fn nut_sweep_uses_the_same_placements_for_every_mass() {
        let m = NutModel::new(NutScene::default(), NutOperation::default()).unwrap();
        let spec = PerturbationSpec::default().with_samples(20);
        let a = nut_mass_sweep(&m, &[1.0, 2.0], &spec, 5).unwrap();
        let b = nut_mass_sweep(&m, &[2.0], &spec, 5).unwrap();
        assert_eq!(a[2..], b[..]);
        assert!(a.iter().all(|r| r.spread.is_some()));
    }
}
