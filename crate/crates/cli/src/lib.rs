//! Library side of the `forceful` command: scenario loading, the three
//! subcommands and their output files. `main.rs` only parses arguments.

pub mod output;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use forceful::domains::bottle::{self, BottleModel};
use forceful::domains::nut::{self, NutModel};
use forceful::domains::Val;
use forceful::planner::{solve, validate_plan, Plan, PlanAction, Problem, ValidationReport};
use forceful::robot::ImpedanceCommand;
use forceful::study::{self, AblationRow, SweepRow};

pub use output::{PlanFile, PlanFileAction, PLAN_FORMAT};
pub use scenario::{DomainKind, Overrides, Scenario};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("planner failure: {0}")]
    Planner(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 1 for bad input or unwritable output, 2 when the planner gives up.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Planner(_) => 2,
            _ => 1,
        }
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// A built domain model.
#[derive(Clone)]
pub enum Model {
    Bottle(Arc<BottleModel>),
    Nut(Arc<NutModel>),
}

impl Model {
    pub fn build(s: &Scenario) -> Result<Self, CliError> {
        Ok(match s.kind() {
            DomainKind::Bottle => Model::Bottle(Arc::new(s.bottle_model()?)),
            DomainKind::Nut => Model::Nut(Arc::new(s.nut_model()?)),
        })
    }

    pub fn problem(&self) -> Result<Problem<Val>, CliError> {
        match self {
            Model::Bottle(m) => m.problem(),
            Model::Nut(m) => m.problem(),
        }
        .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn strategy(&self, plan: &Plan<Val>) -> String {
        match self {
            Model::Bottle(_) => bottle::strategy_label(plan),
            Model::Nut(m) => nut::strategy_label(plan, m),
        }
        .unwrap_or_else(|| "?".into())
    }

    /// Set-point for the twisting arm when `a` is a twist.
    pub fn impedance(&self, a: &PlanAction<Val>) -> Option<ImpedanceCommand> {
        let (w, k) = match self {
            Model::Bottle(m) if a.schema.contains("-twist-") => {
                let f = a.arg("force").and_then(|v| v.payload.force()).unwrap_or(0.0);
                (m.wrench(f), m.twister().stiffness)
            }
            Model::Nut(m) if a.schema.contains("-twist") => (m.wrench(), m.twister().stiffness),
            _ => return None,
        };
        ImpedanceCommand::for_wrench(&w, k).ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub strategy: String,
    pub plan: Plan<Val>,
    pub plan_path: PathBuf,
    pub wall_time: f64,
}

impl SolveReport {
    pub fn summary(&self) -> String {
        let mut s = format!(
            "strategy {}\nsteps {}\ntotal cost {:.6}\n",
            self.strategy,
            self.plan.len(),
            self.plan.total_cost
        );
        for (i, a) in self.plan.actions.iter().enumerate() {
            let margin = a.margin.map_or_else(|| "-".to_string(), |m| format!("{m:.6}"));
            s.push_str(&format!("{:>3}. {:<28} cost {:.6}  margin {margin}\n", i + 1, a.schema, a.cost));
        }
        s.push_str(&format!("plan written to {}", self.plan_path.display()));
        s
    }
}

pub fn cmd_solve(s: &Scenario, out: &Path) -> Result<SolveReport, CliError> {
    let model = Model::build(s)?;
    let problem = model.problem()?;
    let start = Instant::now();
    let plan = solve(&problem, &s.budget)
        .map_err(|e| CliError::Planner(e.to_string()))?
        .plan;
    let wall_time = start.elapsed().as_secs_f64();
    let strategy = model.strategy(&plan);
    let file = PlanFile::new(s, &model, &strategy, &plan);
    fs::create_dir_all(out).map_err(io(out))?;
    let plan_path = out.join("plan.json");
    fs::write(&plan_path, file.to_json()).map_err(io(&plan_path))?;
    Ok(SolveReport {
        strategy,
        plan,
        plan_path,
        wall_time,
    })
}

/// Checks a plan file against the scenario it was made for.
pub fn cmd_validate(s: &Scenario, plan_path: &Path) -> Result<ValidationReport, CliError> {
    let text = fs::read_to_string(plan_path).map_err(io(plan_path))?;
    let file = PlanFile::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", plan_path.display())))?;
    if file.domain != s.kind().to_string() {
        return Err(CliError::Config(format!(
            "plan is for the {} domain but the scenario is {}",
            file.domain,
            s.kind()
        )));
    }
    let model = Model::build(s)?;
    Ok(validate_plan(&model.problem()?, &file.plan()))
}

/// Nut strategies: the second arm when there is one, then weights only.
const NUT_ABLATION: [(&str, &[&str]); 2] = [("finger+RF", &[]), ("finger+weight", &["rf"])];

pub fn cmd_ablate(s: &Scenario, out: &Path) -> Result<Vec<AblationRow>, CliError> {
    let rows = match &s.setup {
        scenario::Setup::Bottle { scene, ablation, .. } => {
            let m = s.bottle_model()?;
            study::run_ablation(scene, &m.op, &s.budget, ablation.cases())
        }
        scenario::Setup::Nut { .. } => NUT_ABLATION
            .iter()
            .map(|(target, disable)| nut_row(s, target, disable))
            .collect::<Result<_, _>>()?,
    };
    fs::create_dir_all(out).map_err(io(out))?;
    let path = out.join("ablation.csv");
    fs::write(&path, output::ablation_csv(&rows)?).map_err(io(&path))?;
    Ok(rows)
}

fn nut_row(s: &Scenario, target: &str, disable: &[&str]) -> Result<AblationRow, CliError> {
    let mut s = s.clone();
    s.apply(&Overrides {
        disable: disable.iter().map(|c| c.to_string()).collect(),
        ..Overrides::default()
    })?;
    let model = Arc::new(s.nut_model()?);
    let start = Instant::now();
    let plan = model.problem().ok().and_then(|p| solve(&p, &s.budget).ok()).map(|x| x.plan);
    let wall_time = start.elapsed().as_secs_f64();
    Ok(match plan {
        Some(plan) => AblationRow {
            strategy: nut::strategy_label(&plan, &model).unwrap_or_else(|| "?".into()),
            steps: plan.len(),
            solved: true,
            cost: plan.total_cost,
            wall_time,
            plan: Some(plan),
        },
        None => AblationRow {
            strategy: target.into(),
            steps: 0,
            solved: false,
            cost: f64::INFINITY,
            wall_time,
            plan: None,
        },
    })
}

/// `var:min:max:steps`, e.g. `force:0:40:9`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: String,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl std::str::FromStr for Sweep {
    type Err = String;

    fn from_str(text: &str) -> Result<Self, String> {
        let parts: Vec<&str> = text.split(':').collect();
        let [var, min, max, steps] = parts[..] else {
            return Err(format!("expected var:min:max:steps, got `{text}`"));
        };
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
        let (min, max) = (num(min)?, num(max)?);
        let steps = steps
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("`{steps}` is not a step count"))?;
        if !(min.is_finite() && max.is_finite() && min <= max) || steps == 0 {
            return Err(format!("bad range in `{text}`"));
        }
        Ok(Sweep {
            var: var.trim().to_ascii_lowercase(),
            min,
            max,
            steps,
        })
    }
}

pub const DEFAULT_PLACEMENTS: usize = 20;

pub fn cmd_robustness(
    s: &Scenario,
    sweep: Option<&Sweep>,
    placements: usize,
    out: &Path,
) -> Result<Vec<SweepRow>, CliError> {
    let spec = s.perturbation;
    let domain_err = |e: forceful::domains::DomainError| CliError::Config(e.to_string());
    let rows = match s.kind() {
        DomainKind::Bottle => {
            let m = s.bottle_model()?;
            let sweep = checked(sweep, "force", || Sweep {
                var: "force".into(),
                min: 0.0,
                max: m.scene.max_down_force,
                steps: 9,
            })?;
            let forces = study::linspace(sweep.min, sweep.max, sweep.steps);
            let mut rows = study::bottle_twist_sweep(&m, &forces, &spec).map_err(domain_err)?;
            rows.extend(study::bottle_fixture_sweep(&m, &forces, &spec).map_err(domain_err)?);
            rows
        }
        DomainKind::Nut => {
            let m = s.nut_model()?;
            let sweep = checked(sweep, "mass", || Sweep {
                var: "mass".into(),
                min: 0.2,
                max: 4.0,
                steps: 8,
            })?;
            if sweep.min <= 0.0 {
                return Err(CliError::Config("--sweep: masses must be positive".into()));
            }
            let masses = study::linspace(sweep.min, sweep.max, sweep.steps);
            study::nut_mass_sweep(&m, &masses, &spec, placements).map_err(domain_err)?
        }
    };
    fs::create_dir_all(out).map_err(io(out))?;
    let path = out.join("robustness.csv");
    fs::write(&path, output::robustness_csv(&rows, s.kind() == DomainKind::Nut)?).map_err(io(&path))?;
    Ok(rows)
}

fn checked(sweep: Option<&Sweep>, var: &str, default: impl FnOnce() -> Sweep) -> Result<Sweep, CliError> {
    match sweep {
        None => Ok(default()),
        Some(s) if s.var == var => Ok(s.clone()),
        Some(s) => Err(CliError::Config(format!(
            "--sweep: this domain sweeps `{var}`, not `{}`",
            s.var
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parses_and_rejects() {
        let s: Sweep = "Force:0:40:9".parse().unwrap();
        assert_eq!(s, Sweep { var: "force".into(), min: 0.0, max: 40.0, steps: 9 });
        for bad in ["force:0:40", "force:a:1:2", "force:2:1:3", "force:0:1:0", "force:0:1:x"] {
            assert!(bad.parse::<Sweep>().is_err(), "{bad}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(String::new()).exit_code(), 1);
        assert_eq!(CliError::Io(String::new()).exit_code(), 1);
        assert_eq!(CliError::Planner(String::new()).exit_code(), 2);
    }
}
