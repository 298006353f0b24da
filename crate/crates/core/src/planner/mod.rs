//! Incremental stream-based task planner.
//!
//! A problem is a set of typed values, STRIPS action schemas and streams.
//! Streams are conditional samplers: given input values whose domain facts
//! hold, they produce new values together with the static facts those values
//! certify. Each level samples every applicable stream over the values known
//! at the start of the level, grounds all schemas over the enlarged fact set
//! and runs a uniform-cost search; the first level with a plan returns it.

mod ground;
mod search;
mod validate;
pub mod toy;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;
use thiserror::Error;

pub use ground::{ground, ground_until, GroundAction};
pub use search::{search, search_until, SearchResult};
pub use validate::{validate_plan, ValidationReport, Violation};

use crate::robustness::LENGTH_PENALTY;

pub type ValueId = usize;

/// Where a sampled value came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub stream: String,
    pub inputs: Vec<String>,
    pub attempt: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Value<P> {
    pub label: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub payload: P,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl<P> Value<P> {
    pub fn new(label: impl Into<String>, ty: impl Into<String>, payload: P) -> Self {
        Self {
            label: label.into(),
            ty: ty.into(),
            payload,
            provenance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<ValueId>,
}

/// `?name` is a schema or stream parameter; anything else names a value by
/// label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String),
    Obj(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub terms: Vec<Term>,
}

/// `atom("AtConf", &["?r", "?q"])`
pub fn atom(predicate: &str, terms: &[&str]) -> Atom {
    Atom {
        predicate: predicate.to_string(),
        terms: terms
            .iter()
            .map(|t| match t.strip_prefix('?') {
                Some(v) => Term::Var(v.to_string()),
                None => Term::Obj(t.to_string()),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

/// `params(&[("?r", "robot"), ("?q", "conf")])`
pub fn params(list: &[(&str, &str)]) -> Vec<Param> {
    list.iter()
        .map(|(n, t)| Param {
            name: n.trim_start_matches('?').to_string(),
            ty: t.to_string(),
        })
        .collect()
}

/// Cost and stability margin of one bound action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionEval {
    pub cost: f64,
    pub margin: Option<f64>,
}

impl ActionEval {
    pub const FREE: ActionEval = ActionEval {
        cost: 0.0,
        margin: None,
    };
}

pub type EvalFn<P> = Arc<dyn Fn(&[&Value<P>]) -> ActionEval + Send + Sync>;
pub type SampleFn<P> =
    Arc<dyn Fn(&[&Value<P>], &mut ChaCha8Rng, u64) -> Option<Vec<(String, P)>> + Send + Sync>;
pub type VerifyFn<P> = Arc<dyn Fn(&[&Value<P>]) -> Result<Option<f64>, String> + Send + Sync>;

pub struct ActionSchema<P> {
    pub name: String,
    pub params: Vec<Param>,
    pub pre: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
    /// Defaults to [`ActionEval::FREE`].
    pub eval: Option<EvalFn<P>>,
}

impl<P> ActionSchema<P> {
    pub fn new(name: &str, params: Vec<Param>) -> Self {
        Self {
            name: name.to_string(),
            params,
            pre: Vec::new(),
            add: Vec::new(),
            del: Vec::new(),
            eval: None,
        }
    }

    pub fn pre(mut self, atoms: Vec<Atom>) -> Self {
        self.pre = atoms;
        self
    }

    pub fn add(mut self, atoms: Vec<Atom>) -> Self {
        self.add = atoms;
        self
    }

    pub fn del(mut self, atoms: Vec<Atom>) -> Self {
        self.del = atoms;
        self
    }

    pub fn eval(mut self, f: impl Fn(&[&Value<P>]) -> ActionEval + Send + Sync + 'static) -> Self {
        self.eval = Some(Arc::new(f));
        self
    }
}

impl<P> fmt::Debug for ActionSchema<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActionSchema")
            .field("name", &self.name)
            .field("params", &self.params)
            .finish_non_exhaustive()
    }
}

/// A conditional sampler. The sampler receives the input values, a
/// generator unique to (seed, stream, inputs, attempt) and the attempt
/// index; it returns one `(label hint, payload)` per output or `None` on a
/// miss. A test stream has no outputs and certifies by returning
/// `Some(vec![])`.
pub struct Stream<P> {
    pub name: String,
    pub inputs: Vec<Param>,
    pub domain: Vec<Atom>,
    pub outputs: Vec<Param>,
    pub certified: Vec<Atom>,
    pub sampler: SampleFn<P>,
    /// Re-checks a certificate from inputs followed by outputs, returning
    /// its stability margin when it has one.
    pub verify: Option<VerifyFn<P>>,
    /// Total sampler calls per input binding over all levels.
    pub max_calls: Option<usize>,
}

impl<P> Stream<P> {
    pub fn new(
        name: &str,
        inputs: Vec<Param>,
        outputs: Vec<Param>,
        sampler: impl Fn(&[&Value<P>], &mut ChaCha8Rng, u64) -> Option<Vec<(String, P)>>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self {
            name: name.to_string(),
            inputs,
            domain: Vec::new(),
            outputs,
            certified: Vec::new(),
            sampler: Arc::new(sampler),
            verify: None,
            max_calls: None,
        }
    }

    pub fn domain(mut self, atoms: Vec<Atom>) -> Self {
        self.domain = atoms;
        self
    }

    pub fn certifies(mut self, atoms: Vec<Atom>) -> Self {
        self.certified = atoms;
        self
    }

    pub fn verify(
        mut self,
        f: impl Fn(&[&Value<P>]) -> Result<Option<f64>, String> + Send + Sync + 'static,
    ) -> Self {
        self.verify = Some(Arc::new(f));
        self
    }

    pub fn max_calls(mut self, n: usize) -> Self {
        self.max_calls = Some(n);
        self
    }
}

impl<P> fmt::Debug for Stream<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stream")
            .field("name", &self.name)
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .finish_non_exhaustive()
    }
}

#[derive(Debug)]
pub struct Problem<P> {
    pub values: Vec<Value<P>>,
    /// Atoms over value labels only.
    pub init: Vec<Atom>,
    pub goal: Vec<Atom>,
    pub schemas: Vec<ActionSchema<P>>,
    pub streams: Vec<Stream<P>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    pub max_levels: usize,
    pub per_level_attempts: usize,
    /// Seconds.
    pub time_limit: f64,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_levels: 8,
            per_level_attempts: 1,
            time_limit: 60.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlannerError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("no plan within {levels} levels: {}", .diagnostics.join("; "))]
    Exhausted {
        levels: usize,
        diagnostics: Vec<String>,
    },
    #[error("time limit of {0:.1} s exceeded")]
    Timeout(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanAction<P> {
    pub schema: String,
    pub args: Vec<Value<P>>,
    pub cost: f64,
    #[serde(default)]
    pub margin: Option<f64>,
}

impl<P> PlanAction<P> {
    pub fn arg(&self, ty: &str) -> Option<&Value<P>> {
        self.args.iter().find(|v| v.ty == ty)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan<P> {
    pub actions: Vec<PlanAction<P>>,
    /// Sum of action costs plus the per-action length penalty.
    pub total_cost: f64,
}

impl<P> Plan<P> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

impl<P> fmt::Display for Plan<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.actions.iter().enumerate() {
            let args: Vec<&str> = a.args.iter().map(|v| v.label.as_str()).collect();
            write!(f, "{:>3}. {}({})  cost {:.4}", i + 1, a.schema, args.join(", "), a.cost)?;
            if let Some(m) = a.margin {
                write!(f, "  margin {m:.4}")?;
            }
            writeln!(f)?;
        }
        write!(f, "total cost {:.4}", self.total_cost)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub levels: usize,
    pub values: usize,
    pub static_facts: usize,
    pub grounded_actions: usize,
    pub expanded_states: usize,
    pub stream_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<P> {
    pub plan: Plan<P>,
    pub stats: SolveStats,
}

/// Values and facts known to the planner.
pub(crate) struct Store<P> {
    pub values: Vec<Value<P>>,
    pub labels: HashMap<String, ValueId>,
    pub facts: BTreeSet<Fact>,
}

impl<P: Clone> Store<P> {
    pub fn new(values: &[Value<P>]) -> Result<Self, PlannerError> {
        let mut s = Self {
            values: Vec::new(),
            labels: HashMap::new(),
            facts: BTreeSet::new(),
        };
        for v in values {
            s.insert(v.clone())?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, v: Value<P>) -> Result<ValueId, PlannerError> {
        if self.labels.contains_key(&v.label) {
            return Err(PlannerError::Malformed(format!("duplicate value label {}", v.label)));
        }
        let id = self.values.len();
        self.labels.insert(v.label.clone(), id);
        self.values.push(v);
        Ok(id)
    }

    pub fn resolve(&self, a: &Atom, binding: &HashMap<&str, ValueId>) -> Result<Fact, PlannerError> {
        let args = a
            .terms
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding
                    .get(v.as_str())
                    .copied()
                    .ok_or_else(|| PlannerError::Malformed(format!("unbound ?{v} in {}", a.predicate))),
                Term::Obj(o) => self
                    .labels
                    .get(o)
                    .copied()
                    .ok_or_else(|| PlannerError::Malformed(format!("unknown object {o} in {}", a.predicate))),
            })
            .collect::<Result<_, _>>()?;
        Ok(Fact {
            predicate: a.predicate.clone(),
            args,
        })
    }
}

impl<P> Problem<P> {
    /// Predicates touched by some effect; everything else is static.
    pub fn fluent_predicates(&self) -> BTreeSet<String> {
        self.schemas
            .iter()
            .flat_map(|s| s.add.iter().chain(&s.del))
            .map(|a| a.predicate.clone())
            .collect()
    }

    /// Goal predicates that stay out of reach even when every stream and
    /// action is assumed to apply to any arguments.
    pub fn unreachable_goal_predicates(&self) -> BTreeSet<String> {
        let mut reached: BTreeSet<&str> = self.init.iter().map(|a| a.predicate.as_str()).collect();
        let all = |atoms: &[Atom], r: &BTreeSet<&str>| atoms.iter().all(|a| r.contains(a.predicate.as_str()));
        loop {
            let before = reached.len();
            for st in &self.streams {
                if all(&st.domain, &reached) {
                    reached.extend(st.certified.iter().map(|a| a.predicate.as_str()));
                }
            }
            for s in &self.schemas {
                if all(&s.pre, &reached) {
                    reached.extend(s.add.iter().map(|a| a.predicate.as_str()));
                }
            }
            if reached.len() == before {
                break;
            }
        }
        self.goal
            .iter()
            .filter(|a| !reached.contains(a.predicate.as_str()))
            .map(|a| a.predicate.clone())
            .collect()
    }

    fn check(&self) -> Result<(), PlannerError> {
        let fluent = self.fluent_predicates();
        let mut arity: HashMap<String, usize> = HashMap::new();
        let mut note = |a: &Atom| -> Result<(), PlannerError> {
            let n = *arity.entry(a.predicate.clone()).or_insert(a.terms.len());
            if n != a.terms.len() {
                return Err(PlannerError::Malformed(format!(
                    "predicate {} used with arities {n} and {}",
                    a.predicate,
                    a.terms.len()
                )));
            }
            Ok(())
        };
        for a in self.init.iter().chain(&self.goal) {
            note(a)?;
        }
        for s in &self.schemas {
            let vars: BTreeSet<&str> = s.params.iter().map(|p| p.name.as_str()).collect();
            let mut used = BTreeSet::new();
            for a in s.pre.iter().chain(&s.add).chain(&s.del) {
                note(a)?;
                for t in &a.terms {
                    if let Term::Var(v) = t {
                        if !vars.contains(v.as_str()) {
                            return Err(PlannerError::Malformed(format!(
                                "{}: ?{v} is not a parameter",
                                s.name
                            )));
                        }
                        used.insert(v.as_str());
                    }
                }
            }
            if used.len() != vars.len() {
                return Err(PlannerError::Malformed(format!(
                    "{}: every parameter must appear in a precondition or effect",
                    s.name
                )));
            }
        }
        for st in &self.streams {
            let vars: BTreeSet<&str> = st
                .inputs
                .iter()
                .chain(&st.outputs)
                .map(|p| p.name.as_str())
                .collect();
            for a in st.domain.iter().chain(&st.certified) {
                note(a)?;
                if fluent.contains(&a.predicate) {
                    return Err(PlannerError::Malformed(format!(
                        "stream {} mentions fluent predicate {}",
                        st.name, a.predicate
                    )));
                }
                for t in &a.terms {
                    if let Term::Var(v) = t {
                        if !vars.contains(v.as_str()) {
                            return Err(PlannerError::Malformed(format!(
                                "stream {}: ?{v} is not an input or output",
                                st.name
                            )));
                        }
                    }
                }
            }
            if st.certified.is_empty() {
                return Err(PlannerError::Malformed(format!(
                    "stream {} certifies nothing",
                    st.name
                )));
            }
        }
        Ok(())
    }
}

/// Mixes the identity of a stream call into a 32-byte ChaCha seed.
fn call_rng(seed: u64, stream: usize, inputs: &[ValueId], attempt: u64) -> ChaCha8Rng {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in inputs {
        h ^= *x as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let words = [seed, stream as u64, h, attempt];
    let mut bytes = [0u8; 32];
    for (chunk, w) in bytes.chunks_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Runs the incremental loop until a plan is found or the budget runs out.
pub fn solve<P: Clone>(problem: &Problem<P>, budget: &Budget) -> Result<Solution<P>, PlannerError> {
    problem.check()?;
    let missing = problem.unreachable_goal_predicates();
    if !missing.is_empty() {
        return Err(PlannerError::Exhausted {
            levels: 0,
            diagnostics: missing
                .into_iter()
                .map(|p| format!("no action or stream can ever produce {p}"))
                .collect(),
        });
    }
    let start = Instant::now();
    let limit = Duration::from_secs_f64(budget.time_limit.max(0.0));
    let fluent = problem.fluent_predicates();
    let mut store = Store::new(&problem.values)?;
    let none = HashMap::new();
    let mut init_fluent = BTreeSet::new();
    for a in &problem.init {
        let f = store.resolve(a, &none)?;
        if fluent.contains(&f.predicate) {
            init_fluent.insert(f);
        } else {
            store.facts.insert(f);
        }
    }
    let goal: Vec<Fact> = problem
        .goal
        .iter()
        .map(|a| store.resolve(a, &none))
        .collect::<Result<_, _>>()?;

    let mut stats = SolveStats::default();
    let mut calls: HashMap<(usize, Vec<ValueId>), usize> = HashMap::new();
    let mut memo: HashMap<(usize, Vec<ValueId>), ActionEval> = HashMap::new();
    let mut last = Vec::new();
    for level in 0..=budget.max_levels {
        if start.elapsed() > limit {
            return Err(PlannerError::Timeout(budget.time_limit));
        }
        stats.levels = level;
        if level > 0 {
            sample_level(problem, budget, &mut store, &mut calls, &mut stats, start, limit)?;
        }
        let deadline = Some(start + limit);
        let actions = ground_until(&problem.schemas, &store.values, &store.facts, &fluent, &mut memo, deadline)
            .ok_or(PlannerError::Timeout(budget.time_limit))?;
        stats.values = store.values.len();
        stats.static_facts = store.facts.len();
        stats.grounded_actions = actions.len();
        let static_goal_ok = goal
            .iter()
            .filter(|f| !fluent.contains(&f.predicate))
            .all(|f| store.facts.contains(f));
        if static_goal_ok {
            let fluent_goal: Vec<Fact> =
                goal.iter().filter(|f| fluent.contains(&f.predicate)).cloned().collect();
            let res = search_until(&actions, &init_fluent, &fluent_goal, deadline);
            stats.expanded_states += res.expanded;
            if res.timed_out {
                return Err(PlannerError::Timeout(budget.time_limit));
            }
            if let Some(chosen) = res.plan {
                let plan = build_plan(&store, &actions, &chosen);
                return Ok(Solution { plan, stats });
            }
        }
        last = actions;
    }
    Err(PlannerError::Exhausted {
        levels: budget.max_levels,
        diagnostics: diagnose(problem, &store, &last, &goal, &fluent),
    })
}

fn sample_level<P: Clone>(
    problem: &Problem<P>,
    budget: &Budget,
    store: &mut Store<P>,
    calls: &mut HashMap<(usize, Vec<ValueId>), usize>,
    stats: &mut SolveStats,
    start: Instant,
    limit: Duration,
) -> Result<(), PlannerError> {
    // every stream sees the same snapshot, so the order of streams does not
    // change which bindings exist at this level
    let known = store.values.len();
    let snapshot = store.facts.clone();
    let mut pending = Vec::new();
    for (si, st) in problem.streams.iter().enumerate() {
        for binding in ground::bindings(&st.inputs, &st.domain, &store.values[..known], &store.labels, &snapshot) {
            pending.push((si, binding));
        }
    }
    for (si, binding) in pending {
        let st = &problem.streams[si];
        let done = calls.entry((si, binding.clone())).or_insert(0);
        let allowed = match st.max_calls {
            Some(m) => m.saturating_sub(*done).min(budget.per_level_attempts),
            None => budget.per_level_attempts,
        };
        for _ in 0..allowed {
            if start.elapsed() > limit {
                return Err(PlannerError::Timeout(budget.time_limit));
            }
            let attempt = *done as u64;
            *done += 1;
            stats.stream_calls += 1;
            let inputs: Vec<&Value<P>> = binding.iter().map(|&i| &store.values[i]).collect();
            let mut rng = call_rng(budget.seed, si, &binding, attempt);
            let Some(outs) = (st.sampler)(&inputs, &mut rng, attempt) else {
                continue;
            };
            if outs.len() != st.outputs.len() {
                return Err(PlannerError::Malformed(format!(
                    "stream {} returned {} outputs, declared {}",
                    st.name,
                    outs.len(),
                    st.outputs.len()
                )));
            }
            let input_labels: Vec<String> = inputs.iter().map(|v| v.label.clone()).collect();
            let mut var: HashMap<&str, ValueId> = st
                .inputs
                .iter()
                .zip(&binding)
                .map(|(p, &id)| (p.name.as_str(), id))
                .collect();
            for (p, (hint, payload)) in st.outputs.iter().zip(outs) {
                let label = fresh_label(store, &hint);
                let id = store.insert(Value {
                    label,
                    ty: p.ty.clone(),
                    payload,
                    provenance: Some(Provenance {
                        stream: st.name.clone(),
                        inputs: input_labels.clone(),
                        attempt,
                    }),
                })?;
                var.insert(p.name.as_str(), id);
            }
            for a in &st.certified {
                let f = store.resolve(a, &var)?;
                store.facts.insert(f);
            }
        }
    }
    Ok(())
}

fn fresh_label<P>(store: &Store<P>, hint: &str) -> String {
    let mut k = 0usize;
    loop {
        let l = format!("{hint}{k}");
        if !store.labels.contains_key(&l) {
            return l;
        }
        k += 1;
    }
}

fn build_plan<P: Clone>(store: &Store<P>, actions: &[GroundAction], chosen: &[usize]) -> Plan<P> {
    let steps: Vec<PlanAction<P>> = chosen
        .iter()
        .map(|&i| {
            let a = &actions[i];
            PlanAction {
                schema: a.name.clone(),
                args: a.args.iter().map(|&v| store.values[v].clone()).collect(),
                cost: a.eval.cost,
                margin: a.eval.margin,
            }
        })
        .collect();
    let total_cost = plan_total(&steps);
    Plan {
        actions: steps,
        total_cost,
    }
}

pub(crate) fn plan_total<P>(steps: &[PlanAction<P>]) -> f64 {
    steps.iter().map(|a| a.cost + LENGTH_PENALTY).sum()
}

fn diagnose<P: Clone>(
    problem: &Problem<P>,
    store: &Store<P>,
    actions: &[GroundAction],
    goal: &[Fact],
    fluent: &BTreeSet<String>,
) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in actions {
        *counts.entry(a.name.as_str()).or_default() += 1;
    }
    let known: BTreeSet<&str> = store.facts.iter().map(|f| f.predicate.as_str()).collect();
    let mut out = Vec::new();
    for s in &problem.schemas {
        if counts.get(s.name.as_str()).copied().unwrap_or(0) > 0 {
            continue;
        }
        let missing: BTreeSet<&str> = s
            .pre
            .iter()
            .filter(|a| !fluent.contains(&a.predicate) && !known.contains(a.predicate.as_str()))
            .map(|a| a.predicate.as_str())
            .collect();
        if missing.is_empty() {
            out.push(format!("{} has no consistent binding of its static preconditions", s.name));
        } else {
            let m: Vec<&str> = missing.into_iter().collect();
            out.push(format!("{} never grounded: no {} facts", s.name, m.join(", ")));
        }
    }
    let reachable = search::relaxed_reachable(actions, &problem_init_fluent(problem, store, fluent));
    for g in goal {
        if fluent.contains(&g.predicate) && !reachable.contains(g) {
            let args: Vec<&str> = g.args.iter().map(|&i| store.values[i].label.as_str()).collect();
            out.push(format!("goal {}({}) unreachable", g.predicate, args.join(", ")));
        }
    }
    if out.is_empty() {
        out.push("goal reachable only by relaxed analysis; search exhausted".into());
    }
    out
}

fn problem_init_fluent<P: Clone>(
    problem: &Problem<P>,
    store: &Store<P>,
    fluent: &BTreeSet<String>,
) -> BTreeSet<Fact> {
    let none = HashMap::new();
    problem
        .init
        .iter()
        .filter_map(|a| store.resolve(a, &none).ok())
        .filter(|f| fluent.contains(&f.predicate))
        .collect()
}
