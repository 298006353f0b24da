//! Scenario files: one JSON5 document with the sections `domain`, `scene`,
//! `operation`, `perturbation` and `budget`. Only `domain` is required;
//! every other section and key falls back to the built-in defaults.
//!
//! ```json5
//! {
//!   domain: { kind: "bottle", costs: "feasibility", ablation: "a1" },
//!   scene: { table: { center: [0.5, 0], size: [1.2, 0.9], mu: 0.2 } },
//!   operation: { down_force: 15, torque: 0.2, disable: ["pt"] },
//!   perturbation: { sample_count: 100, rng_seed: 0 },
//!   budget: { max_levels: 8, time_limit: 60, seed: 0 },
//! }
//! ```

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use forceful::domains::bottle::{BottleModel, BottleOperation};
use forceful::domains::nut::{NutModel, NutOperation};
use forceful::domains::scene::{BottleScene, NutScene};
use forceful::domains::{parse_disable, CostModel, DomainError};
use forceful::planner::Budget;
use forceful::robustness::PerturbationSpec;
use forceful::study::{AblationCase, ABLATION_A1, ABLATION_A2};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Bottle,
    Nut,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Bottle => "bottle",
            DomainKind::Nut => "nut",
        })
    }
}

/// Whether planning charges `-ln p` or only excludes unstable actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostMode {
    Feasibility,
    Robust,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationSet {
    A1,
    A2,
}

impl AblationSet {
    pub fn cases(self) -> &'static [AblationCase] {
        match self {
            AblationSet::A1 => &ABLATION_A1,
            AblationSet::A2 => &ABLATION_A2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub kind: DomainKind,
    /// Defaults to feasibility for the bottle and robust for the nut.
    #[serde(default)]
    pub costs: Option<CostMode>,
    /// Bottle only; defaults to A1 when the bottle starts on the table.
    #[serde(default)]
    pub ablation: Option<AblationSet>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document<S, O> {
    domain: DomainSection,
    #[serde(default)]
    scene: S,
    #[serde(default)]
    operation: O,
    #[serde(default)]
    perturbation: PerturbationSpec,
    #[serde(default)]
    budget: Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Setup {
    Bottle {
        scene: BottleScene,
        op: BottleOperation,
        ablation: AblationSet,
    },
    Nut {
        scene: NutScene,
        op: NutOperation,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub setup: Setup,
    pub costs: CostMode,
    pub perturbation: PerturbationSpec,
    pub budget: Budget,
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Planner seed and perturbation seed.
    pub seed: Option<u64>,
    pub disable: Vec<String>,
    pub samples: Option<usize>,
}

#[derive(Deserialize)]
struct Peek {
    domain: Option<PeekDomain>,
}

#[derive(Deserialize)]
struct PeekDomain {
    kind: Option<serde_json::Value>,
}

fn typed<S, O>(text: &str) -> Result<Document<S, O>, CliError>
where
    S: DeserializeOwned + Default,
    O: DeserializeOwned + Default,
{
    let mut de = json5::Deserializer::from_str(text).map_err(syntax)?;
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let json5::Error::Message { msg, location } = inner;
        CliError::Config(format!("{}{}: {msg}", if path == "." { String::new() } else { path }, at(location)))
    })
}

fn at(location: Option<json5::Location>) -> String {
    match location {
        Some(l) => format!(" (line {}, column {})", l.line, l.column),
        None => String::new(),
    }
}

fn syntax(e: json5::Error) -> CliError {
    let json5::Error::Message { msg, location } = e;
    CliError::Config(format!("syntax error{}: {msg}", at(location)))
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let peek: Peek = json5::from_str(text).map_err(syntax)?;
        let kind = peek
            .domain
            .and_then(|d| d.kind)
            .ok_or_else(|| CliError::Config("domain.kind is required (\"bottle\" or \"nut\")".into()))?;
        let kind: DomainKind = serde_json::from_value(kind)
            .map_err(|_| CliError::Config("domain.kind must be \"bottle\" or \"nut\"".into()))?;
        let (setup, section, perturbation, budget) = match kind {
            DomainKind::Bottle => {
                let d: Document<BottleScene, BottleOperation> = typed(text)?;
                let ablation = d.domain.ablation.unwrap_or(match d.scene.start {
                    forceful::domains::scene::StartSurface::Table => AblationSet::A1,
                    forceful::domains::scene::StartSurface::Mat => AblationSet::A2,
                });
                let setup = Setup::Bottle {
                    scene: d.scene,
                    op: d.operation,
                    ablation,
                };
                (setup, d.domain, d.perturbation, d.budget)
            }
            DomainKind::Nut => {
                let d: Document<NutScene, NutOperation> = typed(text)?;
                if d.domain.ablation.is_some() {
                    return Err(CliError::Config("domain.ablation applies to the bottle only".into()));
                }
                let setup = Setup::Nut {
                    scene: d.scene,
                    op: d.operation,
                };
                (setup, d.domain, d.perturbation, d.budget)
            }
        };
        let costs = section.costs.unwrap_or(match kind {
            DomainKind::Bottle => CostMode::Feasibility,
            DomainKind::Nut => CostMode::Robust,
        });
        let s = Scenario {
            setup,
            costs,
            perturbation,
            budget,
        };
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn check(&self) -> Result<(), CliError> {
        self.perturbation.validate().map_err(|e| CliError::Config(format!("perturbation: {e}")))?;
        let b = &self.budget;
        if b.max_levels == 0 || b.per_level_attempts == 0 || !(b.time_limit > 0.0) {
            return Err(CliError::Config(
                "budget: max_levels, per_level_attempts and time_limit must be positive".into(),
            ));
        }
        let disable: Vec<String> = match &self.setup {
            Setup::Bottle { op, .. } => op.disable.iter().cloned().collect(),
            Setup::Nut { op, .. } => op.disable.iter().cloned().collect(),
        };
        parse_disable(&disable).map_err(|e| CliError::Config(format!("operation.disable: {e}")))?;
        // builds the model once so scene errors surface as config errors
        match &self.setup {
            Setup::Bottle { .. } => self.bottle_model().map(|_| ()),
            Setup::Nut { .. } => self.nut_model().map(|_| ()),
        }
    }

    pub fn kind(&self) -> DomainKind {
        match self.setup {
            Setup::Bottle { .. } => DomainKind::Bottle,
            Setup::Nut { .. } => DomainKind::Nut,
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(seed) = o.seed {
            self.budget.seed = seed;
            self.perturbation.rng_seed = seed;
        }
        if let Some(n) = o.samples {
            self.perturbation.sample_count = n;
        }
        let extra = parse_disable(&o.disable).map_err(|e| CliError::Config(format!("--disable: {e}")))?;
        match &mut self.setup {
            Setup::Bottle { op, .. } => op.disable.extend(extra),
            Setup::Nut { op, .. } => op.disable.extend(extra),
        }
        self.check()
    }

    pub fn cost_model(&self) -> CostModel {
        match self.costs {
            CostMode::Feasibility => CostModel::Feasibility,
            CostMode::Robust => CostModel::Robust {
                perturbation: self.perturbation,
            },
        }
    }

    pub fn bottle_model(&self) -> Result<BottleModel, CliError> {
        let Setup::Bottle { scene, op, .. } = &self.setup else {
            return Err(CliError::Config("scenario is not a bottle scenario".into()));
        };
        let op = BottleOperation {
            cost: self.cost_model(),
            ..op.clone()
        };
        BottleModel::new(scene.clone(), op).map_err(config)
    }

    pub fn nut_model(&self) -> Result<NutModel, CliError> {
        let Setup::Nut { scene, op } = &self.setup else {
            return Err(CliError::Config("scenario is not a nut scenario".into()));
        };
        let op = NutOperation {
            cost: self.cost_model(),
            ..op.clone()
        };
        NutModel::new(scene.clone(), op).map_err(config)
    }
}

fn config(e: DomainError) -> CliError {
    CliError::Config(format!("scene: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_bottle_scenario_uses_defaults() {
        let s = Scenario::parse("{ domain: { kind: 'bottle' } }").unwrap();
        assert_eq!(s.costs, CostMode::Feasibility);
        assert!(matches!(s.setup, Setup::Bottle { ablation: AblationSet::A1, .. }));
        let n = Scenario::parse("{ domain: { kind: 'nut' } }").unwrap();
        assert_eq!(n.costs, CostMode::Robust);
    }

    #[test]
    fn unknown_key_is_reported_with_its_path_and_line() {
        let text = "{\n  domain: { kind: 'bottle' },\n  scene: {\n    table: { center: [0.5, 0], size: [1, 1], muu: 0.2 },\n  },\n}";
        let err = Scenario::parse(text).unwrap_err().to_string();
        assert!(err.contains("scene.table"), "{err}");
        assert!(err.contains("muu"), "{err}");
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn unknown_section_is_rejected() {
        let err = Scenario::parse("{ domain: { kind: 'nut' }, extras: {} }").unwrap_err().to_string();
        assert!(err.contains("extras"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_a_location() {
        let err = Scenario::parse("{ domain: { kind: 'nut' },\n  budget: }").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn missing_domain_is_a_config_error() {
        assert!(matches!(Scenario::parse("{ scene: {} }"), Err(CliError::Config(_))));
        assert!(matches!(Scenario::parse("{ domain: { kind: 'lamp' } }"), Err(CliError::Config(_))));
    }

    #[test]
    fn overrides_take_precedence() {
        let mut s = Scenario::parse("{ domain: { kind: 'bottle' }, budget: { seed: 3 } }").unwrap();
        s.apply(&Overrides {
            seed: Some(9),
            disable: vec!["rf".into(), "SFT".into()],
            samples: Some(7),
        })
        .unwrap();
        assert_eq!(s.budget.seed, 9);
        assert_eq!(s.perturbation.rng_seed, 9);
        assert_eq!(s.perturbation.sample_count, 7);
        assert_eq!(s.bottle_model().unwrap().scene.arms.len(), 1);
        assert!(s
            .apply(&Overrides {
                disable: vec!["xx".into()],
                ..Overrides::default()
            })
            .is_err());
    }

    #[test]
    fn invalid_scene_values_are_config_errors() {
        let err = Scenario::parse("{ domain: { kind: 'bottle' }, scene: { bottle: { mass: -1 } } }").unwrap_err();
        assert!(err.to_string().contains("bottle.mass"), "{err}");
    }
}
