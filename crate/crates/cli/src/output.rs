//! Plan files and CSV tables.

use serde::{Deserialize, Serialize};

use forceful::domains::Val;
use forceful::planner::{Plan, PlanAction};
use forceful::robot::ImpedanceCommand;
use forceful::study::{AblationRow, SweepRow};

use crate::{CliError, Model, Scenario};

pub const PLAN_FORMAT: &str = "forceful-plan/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFileAction {
    #[serde(flatten)]
    pub action: PlanAction<Val>,
    /// Twists only. Stiffness, damping and pose offset in the frame of the
    /// twisted object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impedance: Option<ImpedanceCommand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub format: String,
    pub domain: String,
    pub strategy: String,
    pub seed: u64,
    pub total_cost: f64,
    pub actions: Vec<PlanFileAction>,
}

impl PlanFile {
    pub fn new(s: &Scenario, model: &Model, strategy: &str, plan: &Plan<Val>) -> Self {
        PlanFile {
            format: PLAN_FORMAT.into(),
            domain: s.kind().to_string(),
            strategy: strategy.into(),
            seed: s.budget.seed,
            total_cost: plan.total_cost,
            actions: plan
                .actions
                .iter()
                .map(|a| PlanFileAction {
                    action: a.clone(),
                    impedance: model.impedance(a),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan files hold finite numbers");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let file: PlanFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if file.format != PLAN_FORMAT {
            return Err(format!("unknown plan format `{}`", file.format));
        }
        Ok(file)
    }

    pub fn plan(&self) -> Plan<Val> {
        Plan {
            actions: self.actions.iter().map(|a| a.action.clone()).collect(),
            total_cost: self.total_cost,
        }
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn ablation_csv(rows: &[AblationRow]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["strategy", "steps", "solved", "cost", "wall_time"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.strategy.clone(),
            r.steps.to_string(),
            r.solved.to_string(),
            r.cost.to_string(),
            format!("{:.3}", r.wall_time),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// With `spread`, adds the median and the central 95% range of the
/// per-placement costs.
pub fn robustness_csv(rows: &[SweepRow], spread: bool) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["sweep_value", "method", "probability", "cost"];
    if spread {
        head.extend(["median", "lo95", "hi95"]);
    }
    w.write_record(&head).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.sweep_value.to_string(), r.method.clone(), r.probability.to_string(), r.cost.to_string()];
        if spread {
            let s = r.spread.unwrap_or(forceful::study::Spread {
                median: r.cost,
                lo: r.cost,
                hi: r.cost,
            });
            rec.extend([s.median.to_string(), s.lo.to_string(), s.hi.to_string()]);
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_table_has_the_five_columns() {
        let rows = vec![AblationRow {
            strategy: "GT+VF".into(),
            steps: 0,
            solved: false,
            cost: f64::INFINITY,
            wall_time: 0.01234,
            plan: None,
        }];
        assert_eq!(
            ablation_csv(&rows).unwrap(),
            "strategy,steps,solved,cost,wall_time\nGT+VF,0,false,inf,0.012\n"
        );
    }

    #[test]
    fn spread_columns_are_optional() {
        let rows = vec![SweepRow {
            sweep_value: 1.0,
            method: "grasp".into(),
            probability: 0.5,
            cost: 0.25,
            spread: None,
        }];
        assert_eq!(robustness_csv(&rows, false).unwrap(), "sweep_value,method,probability,cost\n1,grasp,0.5,0.25\n");
        assert!(robustness_csv(&rows, true).unwrap().starts_with("sweep_value,method,probability,cost,median,lo95,hi95\n"));
    }
}
