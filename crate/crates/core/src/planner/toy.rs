//! Small reference domains whose plan spaces can be enumerated by hand.
//! Payloads are plain numbers: edge weights, key costs and road lengths.

use super::{atom, params, ActionEval, ActionSchema, Atom, Problem, Value};

fn cost_of(v: &Value<f64>) -> ActionEval {
    ActionEval {
        cost: v.payload,
        margin: None,
    }
}

/// A walker on a directed graph. Each edge `(from, to, w)` is a value of type
/// `edge` whose traversal costs `w`.
pub fn graph_walk(nodes: usize, edges: &[(usize, usize, f64)], start: usize, goal: usize) -> Problem<f64> {
    let mut values: Vec<Value<f64>> = (0..nodes).map(|i| Value::new(format!("n{i}"), "node", 0.0)).collect();
    let mut init = vec![atom("At", &[&format!("n{start}")])];
    for (k, (a, b, w)) in edges.iter().enumerate() {
        let e = format!("e{k}");
        values.push(Value::new(&e, "edge", *w));
        init.push(atom("Edge", &[&format!("n{a}"), &format!("n{b}"), &e]));
    }
    let walk = ActionSchema::new("walk", params(&[("?a", "node"), ("?b", "node"), ("?e", "edge")]))
        .pre(vec![atom("At", &["?a"]), atom("Edge", &["?a", "?b", "?e"])])
        .add(vec![atom("At", &["?b"])])
        .del(vec![atom("At", &["?a"])])
        .eval(|v| cost_of(v[2]));
    Problem {
        values,
        init,
        goal: vec![atom("At", &[&format!("n{goal}")])],
        schemas: vec![walk],
        streams: Vec::new(),
    }
}

/// Rooms on a line `r0 .. r{rooms-1}`; the door between `r{i}` and
/// `r{i+1}` opens with any key whose `opens` list contains `i`. Keys lie in
/// given rooms and cost their payload to use. Moving costs nothing.
pub fn keys_and_doors(rooms: usize, keys: &[(usize, f64, Vec<usize>)], goal_room: usize) -> Problem<f64> {
    let mut values: Vec<Value<f64>> = (0..rooms).map(|i| Value::new(format!("r{i}"), "room", 0.0)).collect();
    let mut init = vec![atom("In", &["r0"]), atom("HandFree", &[])];
    for i in 0..rooms.saturating_sub(1) {
        let d = format!("d{i}");
        values.push(Value::new(&d, "door", 0.0));
        let (a, b) = (format!("r{i}"), format!("r{}", i + 1));
        init.push(atom("Door", &[&d, &a, &b]));
        init.push(atom("Door", &[&d, &b, &a]));
    }
    for (k, (room, cost, opens)) in keys.iter().enumerate() {
        let key = format!("k{k}");
        values.push(Value::new(&key, "key", *cost));
        init.push(atom("KeyIn", &[&key, &format!("r{room}")]));
        for d in opens {
            init.push(atom("Opens", &[&key, &format!("d{d}")]));
        }
    }
    let take = ActionSchema::new("take", params(&[("?k", "key"), ("?r", "room")]))
        .pre(vec![atom("In", &["?r"]), atom("KeyIn", &["?k", "?r"]), atom("HandFree", &[])])
        .add(vec![atom("Holding", &["?k"])])
        .del(vec![atom("KeyIn", &["?k", "?r"]), atom("HandFree", &[])]);
    let drop = ActionSchema::new("drop", params(&[("?k", "key"), ("?r", "room")]))
        .pre(vec![atom("In", &["?r"]), atom("Holding", &["?k"])])
        .add(vec![atom("KeyIn", &["?k", "?r"]), atom("HandFree", &[])])
        .del(vec![atom("Holding", &["?k"])]);
    let unlock = ActionSchema::new("unlock", params(&[("?k", "key"), ("?d", "door"), ("?a", "room"), ("?b", "room")]))
        .pre(vec![
            atom("In", &["?a"]),
            atom("Door", &["?d", "?a", "?b"]),
            atom("Holding", &["?k"]),
            atom("Opens", &["?k", "?d"]),
        ])
        .add(vec![atom("Open", &["?d"])])
        .eval(|v| cost_of(v[0]));
    let go = ActionSchema::new("go", params(&[("?d", "door"), ("?a", "room"), ("?b", "room")]))
        .pre(vec![atom("In", &["?a"]), atom("Door", &["?d", "?a", "?b"]), atom("Open", &["?d"])])
        .add(vec![atom("In", &["?b"])])
        .del(vec![atom("In", &["?a"])]);
    Problem {
        values,
        init,
        goal: vec![atom("In", &[&format!("r{goal_room}")])],
        schemas: vec![drop, go, take, unlock],
        streams: Vec::new(),
    }
}

/// One truck on weighted roads delivering packages. `packages` lists
/// `(start city, destination city)`.
pub fn delivery(
    cities: usize,
    roads: &[(usize, usize, f64)],
    truck_at: usize,
    packages: &[(usize, usize)],
) -> Problem<f64> {
    let mut values: Vec<Value<f64>> = (0..cities).map(|i| Value::new(format!("c{i}"), "city", 0.0)).collect();
    let mut init = vec![atom("TruckAt", &[&format!("c{truck_at}")])];
    for (k, (a, b, w)) in roads.iter().enumerate() {
        let r = format!("road{k}");
        values.push(Value::new(&r, "road", *w));
        let (ca, cb) = (format!("c{a}"), format!("c{b}"));
        init.push(atom("Road", &[&ca, &cb, &r]));
        init.push(atom("Road", &[&cb, &ca, &r]));
    }
    let mut goal: Vec<Atom> = Vec::new();
    for (k, (from, to)) in packages.iter().enumerate() {
        let p = format!("p{k}");
        values.push(Value::new(&p, "package", 0.0));
        init.push(atom("PkgAt", &[&p, &format!("c{from}")]));
        goal.push(atom("PkgAt", &[&p, &format!("c{to}")]));
    }
    let drive = ActionSchema::new("drive", params(&[("?a", "city"), ("?b", "city"), ("?r", "road")]))
        .pre(vec![atom("TruckAt", &["?a"]), atom("Road", &["?a", "?b", "?r"])])
        .add(vec![atom("TruckAt", &["?b"])])
        .del(vec![atom("TruckAt", &["?a"])])
        .eval(|v| cost_of(v[2]));
    let load = ActionSchema::new("load", params(&[("?p", "package"), ("?c", "city")]))
        .pre(vec![atom("TruckAt", &["?c"]), atom("PkgAt", &["?p", "?c"])])
        .add(vec![atom("InTruck", &["?p"])])
        .del(vec![atom("PkgAt", &["?p", "?c"])]);
    let unload = ActionSchema::new("unload", params(&[("?p", "package"), ("?c", "city")]))
        .pre(vec![atom("TruckAt", &["?c"]), atom("InTruck", &["?p"])])
        .add(vec![atom("PkgAt", &["?p", "?c"])])
        .del(vec![atom("InTruck", &["?p"])]);
    Problem {
        values,
        init,
        goal,
        schemas: vec![drive, load, unload],
        streams: Vec::new(),
    }
}
