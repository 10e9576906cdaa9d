//! Graphviz rendering. Output depends only on the model, never on hash order.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::model::{ActionModel, Frame, KripkeModel};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn render(kind: &str, frame: &Frame, node_attrs: impl Fn(usize) -> String) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {kind} {{").unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    let mut order: Vec<usize> = (0..frame.len()).collect();
    order.sort_by(|&a, &b| frame.name(a).cmp(frame.name(b)));
    for &n in &order {
        let point = if n == frame.point() { ", style=filled, fillcolor=lightgrey, penwidth=2" } else { "" };
        writeln!(out, "  {} [{}{}];", quote(frame.name(n)), node_attrs(n), point).unwrap();
    }
    let mut merged: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
    for (a, from, to) in frame.edges() {
        merged
            .entry((frame.name(from), frame.name(to)))
            .or_default()
            .push(frame.agents()[a].as_str());
    }
    for ((from, to), mut agents) in merged {
        agents.sort();
        writeln!(out, "  {} -> {} [label={}];", quote(from), quote(to), quote(&agents.join(","))).unwrap();
    }
    out.push_str("}\n");
    out
}

/// Worlds are circles labelled with their true atoms; the id sits outside.
pub fn kripke_to_dot(m: &KripkeModel) -> String {
    render("kripke", m.frame(), |w| {
        let atoms: Vec<&str> = m.atoms_at(w).iter().map(String::as_str).collect();
        format!(
            "shape=circle, label={}, xlabel={}",
            quote(&atoms.join(",")),
            quote(m.frame().name(w))
        )
    })
}

/// Events are boxes labelled with their preconditions; the id sits outside.
pub fn action_to_dot(u: &ActionModel) -> String {
    render("action", u.frame(), |e| {
        format!(
            "shape=box, label={}, xlabel={}",
            quote(&u.pre(e).to_unicode()),
            quote(u.frame().name(e))
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn merges_parallel_edges_and_shades_the_point() {
        let dot = kripke_to_dot(&fixtures::blt_initial());
        assert!(dot.starts_with("digraph kripke {"));
        assert_eq!(dot.matches("fillcolor").count(), 1);
        let edge_lines: Vec<&str> = dot.lines().filter(|l| l.contains("->")).collect();
        let mut pairs: Vec<&str> = edge_lines.iter().map(|l| l.split(" [").next().unwrap()).collect();
        let n = pairs.len();
        pairs.dedup();
        assert_eq!(pairs.len(), n);
    }

    #[test]
    fn deterministic_and_escaped() {
        let u = fixtures::blt_goal_u();
        assert_eq!(action_to_dot(&u), action_to_dot(&u.clone()));
        assert_eq!(quote("a\"b"), "\"a\\\"b\"");
    }
}
