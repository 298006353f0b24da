use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use web_time::Instant;

use super::{Fact, GroundAction};
use crate::robustness::LENGTH_PENALTY;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Indices into the grounded action list, in execution order.
    pub plan: Option<Vec<usize>>,
    /// Summed action costs plus the length penalty; `inf` without a plan.
    pub cost: f64,
    pub expanded: usize,
    /// The deadline passed before the search finished.
    pub timed_out: bool,
}

struct Node {
    cost: f64,
    path: Vec<u32>,
    state: Vec<u32>,
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

struct Compiled {
    pre: Vec<u32>,
    add: Vec<u32>,
    del: Vec<u32>,
    step: f64,
}

/// Uniform-cost search over sets of fluent facts. Each action costs its
/// evaluated cost plus the length penalty. Among plans of equal cost the one
/// whose sequence of action indices is lexicographically smallest wins; the
/// grounder sorts actions by name so this is a tie-break by action name.
pub fn search(actions: &[GroundAction], init: &BTreeSet<Fact>, goal: &[Fact]) -> SearchResult {
    search_until(actions, init, goal, None)
}

/// [`search`] that gives up once `deadline` has passed.
pub fn search_until(
    actions: &[GroundAction],
    init: &BTreeSet<Fact>,
    goal: &[Fact],
    deadline: Option<Instant>,
) -> SearchResult {
    let reachable = relaxed_reachable(actions, init);
    if !goal.iter().all(|f| reachable.contains(f)) {
        return SearchResult {
            plan: None,
            cost: f64::INFINITY,
            expanded: 0,
            timed_out: false,
        };
    }
    let mut ids: HashMap<&Fact, u32> = HashMap::new();
    let mut intern = |f| {
        let n = ids.len() as u32;
        *ids.entry(f).or_insert(n)
    };
    let mut start: Vec<u32> = init.iter().map(&mut intern).collect();
    let compiled: Vec<Compiled> = actions
        .iter()
        .map(|a| {
            let mut c = Compiled {
                pre: a.pre.iter().map(&mut intern).collect(),
                add: a.add.iter().map(&mut intern).collect(),
                del: a.del.iter().map(&mut intern).collect(),
                step: a.eval.cost + LENGTH_PENALTY,
            };
            c.pre.sort_unstable();
            c
        })
        .collect();
    let mut target: Vec<u32> = goal.iter().map(&mut intern).collect();
    start.sort_unstable();
    target.sort_unstable();
    target.dedup();

    // actions keyed by their smallest precondition
    let mut by_first: HashMap<u32, Vec<usize>> = HashMap::new();
    let mut unconditional = Vec::new();
    for (i, c) in compiled.iter().enumerate() {
        match c.pre.first() {
            Some(f) => by_first.entry(*f).or_default().push(i),
            None => unconditional.push(i),
        }
    }

    let mut best: HashMap<Vec<u32>, f64> = HashMap::new();
    let mut closed: HashSet<Vec<u32>> = HashSet::new();
    let mut heap = BinaryHeap::new();
    best.insert(start.clone(), 0.0);
    heap.push(Reverse(Node {
        cost: 0.0,
        path: Vec::new(),
        state: start,
    }));
    let mut expanded = 0;
    while let Some(Reverse(node)) = heap.pop() {
        if closed.contains(&node.state) {
            continue;
        }
        if contains_all(&node.state, &target) {
            return SearchResult {
                plan: Some(node.path.iter().map(|&i| i as usize).collect()),
                cost: node.cost,
                expanded,
                timed_out: false,
            };
        }
        expanded += 1;
        if expanded % 256 == 0 && deadline.is_some_and(|d| Instant::now() > d) {
            return SearchResult {
                plan: None,
                cost: f64::INFINITY,
                expanded,
                timed_out: true,
            };
        }
        let mut candidates: Vec<usize> = unconditional.clone();
        for f in &node.state {
            if let Some(v) = by_first.get(f) {
                candidates.extend(v);
            }
        }
        for i in candidates {
            let c = &compiled[i];
            if !contains_all(&node.state, &c.pre) {
                continue;
            }
            let mut next: Vec<u32> = node
                .state
                .iter()
                .copied()
                .filter(|f| !c.del.contains(f))
                .collect();
            next.extend(&c.add);
            next.sort_unstable();
            next.dedup();
            if closed.contains(&next) {
                continue;
            }
            let cost = node.cost + c.step;
            match best.get(&next) {
                Some(&b) if b < cost => continue,
                _ => {
                    best.insert(next.clone(), cost);
                }
            }
            let mut path = node.path.clone();
            path.push(i as u32);
            heap.push(Reverse(Node {
                cost,
                path,
                state: next,
            }));
        }
        closed.insert(node.state);
    }
    SearchResult {
        plan: None,
        cost: f64::INFINITY,
        expanded,
        timed_out: false,
    }
}

/// `needles` and `haystack` sorted ascending.
fn contains_all(haystack: &[u32], needles: &[u32]) -> bool {
    needles.iter().all(|n| haystack.binary_search(n).is_ok())
}

/// Fluent facts reachable from `init` when delete effects are ignored.
pub(crate) fn relaxed_reachable(actions: &[GroundAction], init: &BTreeSet<Fact>) -> HashSet<Fact> {
    let mut reached: HashSet<Fact> = init.iter().cloned().collect();
    let mut used = vec![false; actions.len()];
    loop {
        let mut grew = false;
        for (i, a) in actions.iter().enumerate() {
            if used[i] || !a.pre.iter().all(|f| reached.contains(f)) {
                continue;
            }
            used[i] = true;
            for f in &a.add {
                grew |= reached.insert(f.clone());
            }
        }
        if !grew {
            return reached;
        }
    }
}
