//! Graphviz rendering of the automata.
//!
//! Final states are drawn as double circles and the initial state has an
//! incoming edge from an invisible point node.

use std::fmt::Write;

use crate::automata::{LocalNfa, SyncAutomaton};
use crate::projection::SubsetMachine;
use crate::syntax::{GlobalType, NodeId};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn header(out: &mut String, name: &str) {
    let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
    out.push_str("  rankdir=LR;\n");
    out.push_str("  __start [shape=point];\n");
}

fn node_label(g: Option<&GlobalType>, id: NodeId) -> String {
    match g {
        Some(g) => format!("{id}: {}", g.pretty_node(id)),
        None => id.to_string(),
    }
}

/// Global automaton; pass the global type to label states with subterms.
pub fn sync_automaton_to_dot(a: &SyncAutomaton, g: Option<&GlobalType>) -> String {
    let mut out = String::new();
    header(&mut out, "global");
    for &q in a.states() {
        let shape = if a.is_final(q) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  n{q} [shape={shape}, label=\"{}\"];", escape(&node_label(g, q)));
    }
    let _ = writeln!(out, "  __start -> n{};", a.initial());
    for t in a.transitions() {
        let label = t.label.as_ref().map_or("ε".to_string(), |e| e.to_string());
        let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", t.source, t.target, escape(&label));
    }
    out.push_str("}\n");
    out
}

pub fn local_nfa_to_dot(a: &LocalNfa, g: Option<&GlobalType>) -> String {
    let mut out = String::new();
    header(&mut out, a.role().as_str());
    for &q in a.states() {
        let shape = if a.finals().contains(&q) {
            "doublecircle"
        } else {
            "circle"
        };
        let _ = writeln!(out, "  n{q} [shape={shape}, label=\"{}\"];", escape(&node_label(g, q)));
    }
    let _ = writeln!(out, "  __start -> n{};", a.initial());
    for t in a.transitions() {
        let label = t.label.as_ref().map_or("ε".to_string(), |e| e.to_string());
        let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", t.source, t.target, escape(&label));
    }
    out.push_str("}\n");
    out
}

/// Subset machine; states are labelled with their member subterm ids.
pub fn subset_machine_to_dot(m: &SubsetMachine) -> String {
    let mut out = String::new();
    header(&mut out, m.role().as_str());
    for (i, s) in m.states().iter().enumerate() {
        let shape = if m.is_final(i) { "doublecircle" } else { "circle" };
        let _ = writeln!(out, "  s{i} [shape={shape}, label=\"{}\"];", escape(&s.to_string()));
    }
    let _ = writeln!(out, "  __start -> s{};", m.initial());
    for (s, e, t) in m.transitions() {
        let _ = writeln!(out, "  s{s} -> s{t} [label=\"{}\"];", escape(&e.to_string()));
    }
    out.push_str("}\n");
    out
}
