use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{plan_total, ActionEval, Atom, Fact, Plan, Problem, Store, Term, Value, ValueId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Zero-based plan step, `None` for whole-plan problems.
    pub step: Option<usize>,
    pub action: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub total_cost: f64,
    pub margins: Vec<Option<f64>>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-simulates `plan` from the initial state. Every static precondition
/// that is not an initial fact is re-certified by calling the `verify` hook
/// of a stream that certifies its predicate; costs are recomputed from the
/// schemas' evaluation hooks.
pub fn validate_plan<P: Clone + PartialEq>(problem: &Problem<P>, plan: &Plan<P>) -> ValidationReport {
    let mut report = ValidationReport {
        violations: Vec::new(),
        total_cost: f64::NAN,
        margins: Vec::new(),
    };
    let whole = |message: String| Violation {
        step: None,
        action: None,
        message,
    };
    let mut store = match Store::new(&problem.values) {
        Ok(s) => s,
        Err(e) => {
            report.violations.push(whole(e.to_string()));
            return report;
        }
    };
    for (i, a) in plan.actions.iter().enumerate() {
        for v in &a.args {
            match store.labels.get(&v.label) {
                Some(&id) => {
                    let known = &store.values[id];
                    if known.ty != v.ty || known.payload != v.payload {
                        report.violations.push(Violation {
                            step: Some(i),
                            action: Some(a.schema.clone()),
                            message: format!("value {} differs from the one already bound", v.label),
                        });
                    }
                }
                None => {
                    store.insert(v.clone()).expect("label checked above");
                }
            }
        }
    }

    let fluent = problem.fluent_predicates();
    let none = HashMap::new();
    let mut state = BTreeSet::new();
    for a in &problem.init {
        match store.resolve(a, &none) {
            Ok(f) if fluent.contains(&f.predicate) => {
                state.insert(f);
            }
            Ok(f) => {
                store.facts.insert(f);
            }
            Err(e) => report.violations.push(whole(e.to_string())),
        }
    }

    let mut certifiers: HashMap<&str, Vec<(usize, &Atom)>> = HashMap::new();
    for (si, st) in problem.streams.iter().enumerate() {
        for a in &st.certified {
            certifiers.entry(a.predicate.as_str()).or_default().push((si, a));
        }
    }

    let mut costs = Vec::new();
    for (i, step) in plan.actions.iter().enumerate() {
        let mut flag = |message: String| {
            report.violations.push(Violation {
                step: Some(i),
                action: Some(step.schema.clone()),
                message,
            })
        };
        let Some(schema) = problem.schemas.iter().find(|s| s.name == step.schema) else {
            flag(format!("unknown action {}", step.schema));
            continue;
        };
        if schema.params.len() != step.args.len() {
            flag(format!("expected {} arguments, got {}", schema.params.len(), step.args.len()));
            continue;
        }
        let mut binding: HashMap<&str, ValueId> = HashMap::new();
        for (p, v) in schema.params.iter().zip(&step.args) {
            if p.ty != v.ty {
                flag(format!("argument ?{} must be a {}, got {}", p.name, p.ty, v.ty));
            }
            binding.insert(p.name.as_str(), store.labels[&v.label]);
        }
        let mut margin = None;
        for a in &schema.pre {
            let f = match store.resolve(a, &binding) {
                Ok(f) => f,
                Err(e) => {
                    flag(e.to_string());
                    continue;
                }
            };
            if fluent.contains(&f.predicate) {
                if !state.contains(&f) {
                    flag(format!("precondition {} does not hold", show(&f, &store.values)));
                }
                continue;
            }
            if store.facts.contains(&f) {
                continue;
            }
            match certify(problem, &certifiers, &store.values, &store.labels, &f) {
                Ok(m) => {
                    if let Some(m) = m {
                        margin = Some(margin.map_or(m, |x: f64| x.min(m)));
                    }
                }
                Err(why) => flag(format!("{} not certified: {why}", show(&f, &store.values))),
            }
        }
        let resolve_all = |atoms: &[Atom]| -> Vec<Fact> {
            atoms.iter().filter_map(|a| store.resolve(a, &binding).ok()).collect()
        };
        for f in resolve_all(&schema.del) {
            state.remove(&f);
        }
        for f in resolve_all(&schema.add) {
            state.insert(f);
        }
        let eval = match &schema.eval {
            Some(e) => {
                let vs: Vec<&Value<P>> = step.args.iter().collect();
                e(&vs)
            }
            None => ActionEval::FREE,
        };
        if !eval.cost.is_finite() {
            flag("action has infinite cost".into());
        } else if (eval.cost - step.cost).abs() > 1e-9 * (1.0 + eval.cost.abs()) {
            flag(format!("recorded cost {} but action costs {}", step.cost, eval.cost));
        }
        if let (Some(recorded), Some(actual)) = (step.margin, eval.margin) {
            if (recorded - actual).abs() > 1e-9 * (1.0 + actual.abs()) {
                flag(format!("recorded margin {recorded} but action margin is {actual}"));
            }
        }
        report.margins.push(eval.margin.or(margin));
        costs.push(eval.cost);
    }

    for a in &problem.goal {
        match store.resolve(a, &none) {
            Ok(f) => {
                let holds = if fluent.contains(&f.predicate) {
                    state.contains(&f)
                } else {
                    store.facts.contains(&f)
                };
                if !holds {
                    report
                        .violations
                        .push(whole(format!("goal {} not reached", show(&f, &store.values))));
                }
            }
            Err(e) => report.violations.push(whole(e.to_string())),
        }
    }
    let steps: Vec<_> = plan.actions.iter().zip(&costs).map(|(a, c)| (a, *c)).collect();
    report.total_cost = steps.iter().map(|(_, c)| c).sum::<f64>()
        + crate::robustness::LENGTH_PENALTY * steps.len() as f64;
    let recorded = plan_total(&plan.actions);
    if (plan.total_cost - recorded).abs() > 1e-9 * (1.0 + recorded.abs()) {
        report.violations.push(whole(format!(
            "recorded total cost {} does not match the sum of action costs {recorded}",
            plan.total_cost
        )));
    }
    report
}

fn certify<P>(
    problem: &Problem<P>,
    certifiers: &HashMap<&str, Vec<(usize, &Atom)>>,
    values: &[Value<P>],
    labels: &HashMap<String, ValueId>,
    fact: &Fact,
) -> Result<Option<f64>, String> {
    let Some(cands) = certifiers.get(fact.predicate.as_str()) else {
        return Err("no stream certifies this predicate".into());
    };
    let mut why = Vec::new();
    'cands: for &(si, a) in cands {
        let st = &problem.streams[si];
        let mut var: HashMap<&str, ValueId> = HashMap::new();
        for (t, &v) in a.terms.iter().zip(&fact.args) {
            match t {
                Term::Obj(o) => {
                    if labels.get(o) != Some(&v) {
                        continue 'cands;
                    }
                }
                Term::Var(n) => {
                    if *var.entry(n.as_str()).or_insert(v) != v {
                        continue 'cands;
                    }
                }
            }
        }
        let mut args = Vec::new();
        for p in st.inputs.iter().chain(&st.outputs) {
            let Some(&id) = var.get(p.name.as_str()) else {
                why.push(format!("{} does not bind ?{}", st.name, p.name));
                continue 'cands;
            };
            if values[id].ty != p.ty {
                continue 'cands;
            }
            args.push(&values[id]);
        }
        match &st.verify {
            None => return Ok(None),
            Some(f) => match f(&args) {
                Ok(m) => return Ok(m),
                Err(e) => why.push(format!("{}: {e}", st.name)),
            },
        }
    }
    if why.is_empty() {
        why.push("no certifying stream matches the argument types".into());
    }
    Err(why.join("; "))
}

fn show<P>(f: &Fact, values: &[Value<P>]) -> String {
    let args: Vec<&str> = f.args.iter().map(|&i| values[i].label.as_str()).collect();
    format!("{}({})", f.predicate, args.join(", "))
}
