use std::collections::{BTreeSet, HashMap};

use web_time::Instant;

use super::{ActionEval, ActionSchema, Atom, Fact, Param, Term, Value, ValueId};

/// A fully bound action. `pre` holds only fluent preconditions; static ones
/// were checked while grounding.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundAction {
    pub schema: usize,
    pub name: String,
    pub args: Vec<ValueId>,
    pub pre: Vec<Fact>,
    pub add: Vec<Fact>,
    pub del: Vec<Fact>,
    pub eval: ActionEval,
}

type Index<'a> = HashMap<&'a str, Vec<&'a Fact>>;

fn index(facts: &BTreeSet<Fact>) -> Index<'_> {
    let mut idx: Index = HashMap::new();
    for f in facts {
        idx.entry(f.predicate.as_str()).or_default().push(f);
    }
    idx
}

/// Every type-consistent binding of `params` satisfying the `atoms` over
/// `facts`, in ascending id order. Parameters not mentioned in any atom range
/// over all values of their type.
pub(crate) fn bindings<P>(
    params: &[Param],
    atoms: &[Atom],
    values: &[Value<P>],
    labels: &HashMap<String, ValueId>,
    facts: &BTreeSet<Fact>,
) -> Vec<Vec<ValueId>> {
    let idx = index(facts);
    bindings_indexed(params, atoms, values, labels, &idx)
}

fn bindings_indexed<P>(
    params: &[Param],
    atoms: &[Atom],
    values: &[Value<P>],
    labels: &HashMap<String, ValueId>,
    idx: &Index<'_>,
) -> Vec<Vec<ValueId>> {
    let slot: HashMap<&str, usize> = params
        .iter()
        .enumerate()
        .map(|(i, p)| (p.name.as_str(), i))
        .collect();
    let mut partial = vec![None; params.len()];
    let mut out = BTreeSet::new();
    join(atoms, params, &slot, values, labels, idx, &mut partial, &mut out);
    out.into_iter().collect()
}

#[allow(clippy::too_many_arguments)]
fn join<P>(
    atoms: &[Atom],
    params: &[Param],
    slot: &HashMap<&str, usize>,
    values: &[Value<P>],
    labels: &HashMap<String, ValueId>,
    idx: &Index<'_>,
    partial: &mut Vec<Option<ValueId>>,
    out: &mut BTreeSet<Vec<ValueId>>,
) {
    let Some((first, rest)) = atoms.split_first() else {
        enumerate_free(params, values, partial, 0, out);
        return;
    };
    let Some(candidates) = idx.get(first.predicate.as_str()) else {
        return;
    };
    'facts: for f in candidates {
        if f.args.len() != first.terms.len() {
            continue;
        }
        let mut newly = Vec::new();
        for (t, &v) in first.terms.iter().zip(&f.args) {
            let ok = match t {
                Term::Obj(o) => labels.get(o) == Some(&v),
                Term::Var(name) => match slot.get(name.as_str()) {
                    None => false,
                    Some(&s) => match partial[s] {
                        Some(b) => b == v,
                        None if values.get(v).is_some_and(|x| x.ty == params[s].ty) => {
                            partial[s] = Some(v);
                            newly.push(s);
                            true
                        }
                        None => false,
                    },
                },
            };
            if !ok {
                for s in newly {
                    partial[s] = None;
                }
                continue 'facts;
            }
        }
        join(rest, params, slot, values, labels, idx, partial, out);
        for s in newly {
            partial[s] = None;
        }
    }
}

fn enumerate_free<P>(
    params: &[Param],
    values: &[Value<P>],
    partial: &mut Vec<Option<ValueId>>,
    from: usize,
    out: &mut BTreeSet<Vec<ValueId>>,
) {
    match (from..params.len()).find(|&i| partial[i].is_none()) {
        None => {
            out.insert(partial.iter().map(|v| v.unwrap()).collect());
        }
        Some(i) => {
            for (id, v) in values.iter().enumerate() {
                if v.ty == params[i].ty {
                    partial[i] = Some(id);
                    enumerate_free(params, values, partial, i + 1, out);
                }
            }
            partial[i] = None;
        }
    }
}

fn instantiate(a: &Atom, slot: &HashMap<&str, usize>, args: &[ValueId], labels: &HashMap<String, ValueId>) -> Option<Fact> {
    let args = a
        .terms
        .iter()
        .map(|t| match t {
            Term::Var(v) => slot.get(v.as_str()).map(|&s| args[s]),
            Term::Obj(o) => labels.get(o).copied(),
        })
        .collect::<Option<Vec<_>>>()?;
    Some(Fact {
        predicate: a.predicate.clone(),
        args,
    })
}

/// All bindings of every schema whose static preconditions hold in `facts`
/// and whose cost is finite, sorted by schema name and argument labels.
/// `memo` caches evaluations by schema index and arguments.
pub fn ground<P>(
    schemas: &[ActionSchema<P>],
    values: &[Value<P>],
    facts: &BTreeSet<Fact>,
    fluent: &BTreeSet<String>,
    memo: &mut HashMap<(usize, Vec<ValueId>), ActionEval>,
) -> Vec<GroundAction> {
    ground_until(schemas, values, facts, fluent, memo, None).unwrap_or_default()
}

/// [`ground`] that returns `None` once `deadline` has passed.
pub fn ground_until<P>(
    schemas: &[ActionSchema<P>],
    values: &[Value<P>],
    facts: &BTreeSet<Fact>,
    fluent: &BTreeSet<String>,
    memo: &mut HashMap<(usize, Vec<ValueId>), ActionEval>,
    deadline: Option<Instant>,
) -> Option<Vec<GroundAction>> {
    let labels: HashMap<String, ValueId> = values
        .iter()
        .enumerate()
        .map(|(i, v)| (v.label.clone(), i))
        .collect();
    let idx = index(facts);
    let mut out = Vec::new();
    for (si, s) in schemas.iter().enumerate() {
        let statics: Vec<Atom> = s
            .pre
            .iter()
            .filter(|a| !fluent.contains(&a.predicate))
            .cloned()
            .collect();
        let slot: HashMap<&str, usize> = s
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| (p.name.as_str(), i))
            .collect();
        for args in bindings_indexed(&s.params, &statics, values, &labels, &idx) {
            if deadline.is_some_and(|d| Instant::now() > d) {
                return None;
            }
            let inst = |atoms: &[Atom], only_fluent: bool| -> Option<Vec<Fact>> {
                atoms
                    .iter()
                    .filter(|a| !only_fluent || fluent.contains(&a.predicate))
                    .map(|a| instantiate(a, &slot, &args, &labels))
                    .collect()
            };
            let (Some(mut pre), Some(add), Some(del)) =
                (inst(&s.pre, true), inst(&s.add, false), inst(&s.del, false))
            else {
                continue;
            };
            pre.sort();
            pre.dedup();
            let eval = *memo.entry((si, args.clone())).or_insert_with(|| match &s.eval {
                Some(f) => {
                    let vs: Vec<&Value<P>> = args.iter().map(|&i| &values[i]).collect();
                    f(&vs)
                }
                None => ActionEval::FREE,
            });
            if !(eval.cost.is_finite() && eval.cost >= 0.0) {
                continue;
            }
            out.push(GroundAction {
                schema: si,
                name: s.name.clone(),
                args,
                pre,
                add,
                del,
                eval,
            });
        }
    }
    out.sort_by(|a, b| {
        a.name.cmp(&b.name).then_with(|| {
            let la = a.args.iter().map(|&i| values[i].label.as_str());
            let lb = b.args.iter().map(|&i| values[i].label.as_str());
            la.cmp(lb)
        })
    });
    Some(out)
}
