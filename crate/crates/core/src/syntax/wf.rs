use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use super::{GlobalType, Node, NodeId};
use crate::names::RecVar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WfRule {
    /// Two branches of one choice share a (receiver, message) pair.
    BranchDistinctness,
    /// A branch sends to its own sender.
    SelfCommunication,
    /// A recursion variable is reachable from its binder without a message.
    Unguarded,
    /// A variable is free, or a variable name is bound more than once.
    UnboundVariable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WfViolation {
    pub rule: WfRule,
    pub node: NodeId,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WellFormednessReport {
    pub violations: Vec<WfViolation>,
}

impl WellFormednessReport {
    pub fn is_well_formed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn rules(&self) -> Vec<WfRule> {
        self.violations.iter().map(|v| v.rule).collect()
    }
}

impl fmt::Display for WellFormednessReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {:?} at subterm {}: {}", v.rule, v.node, v.message)?;
        }
        Ok(())
    }
}

/// Checks branch distinctness, sender/receiver distinctness, guardedness and
/// closedness. Variable names must also be bound at most once, which keeps
/// the variable-to-binder map a function.
pub fn validate_well_formedness(g: &GlobalType) -> WellFormednessReport {
    let mut violations = Vec::new();

    for id in g.ids() {
        match g.node(id) {
            Node::Choice { sender, branches } => {
                let mut seen = BTreeSet::new();
                for b in branches {
                    if &b.receiver == sender {
                        violations.push(WfViolation {
                            rule: WfRule::SelfCommunication,
                            node: id,
                            message: format!("`{sender}` sends `{}` to itself", b.message),
                        });
                    }
                    if !seen.insert((&b.receiver, &b.message)) {
                        violations.push(WfViolation {
                            rule: WfRule::BranchDistinctness,
                            node: id,
                            message: format!("branch `{sender}->{}:{}` occurs more than once", b.receiver, b.message),
                        });
                    }
                }
            }
            Node::Rec { var, body } => {
                let mut cur = *body;
                while let Node::Rec { body, .. } = g.node(cur) {
                    cur = *body;
                }
                if matches!(g.node(cur), Node::Var(v) if v == var) {
                    violations.push(WfViolation {
                        rule: WfRule::Unguarded,
                        node: id,
                        message: format!("`{var}` occurs in `mu {var}` without a message in between"),
                    });
                }
            }
            Node::End | Node::Var(_) => {}
        }
    }

    let mut binders: BTreeMap<&RecVar, NodeId> = BTreeMap::new();
    for id in g.ids() {
        if let Node::Rec { var, .. } = g.node(id) {
            if let Some(first) = binders.get(var) {
                violations.push(WfViolation {
                    rule: WfRule::UnboundVariable,
                    node: id,
                    message: format!("`{var}` is already bound by subterm {first}"),
                });
            } else {
                binders.insert(var, id);
            }
        }
    }

    // Scoped traversal for free variables and nested rebinding. The same
    // node can be reached under different scopes because of sharing.
    let mut visited: HashSet<(NodeId, Vec<RecVar>)> = HashSet::new();
    let mut reported: BTreeSet<(NodeId, WfRule)> = BTreeSet::new();
    let mut stack = vec![(g.root(), Vec::<RecVar>::new())];
    while let Some((id, scope)) = stack.pop() {
        if !visited.insert((id, scope.clone())) {
            continue;
        }
        match g.node(id) {
            Node::Var(v) => {
                if !scope.contains(v) && reported.insert((id, WfRule::UnboundVariable)) {
                    violations.push(WfViolation {
                        rule: WfRule::UnboundVariable,
                        node: id,
                        message: format!("`{v}` is not bound by an enclosing `mu`"),
                    });
                }
            }
            Node::Rec { var, body } => {
                // nested rebinding is already reported as a repeated binder
                let mut inner = scope.clone();
                if !scope.contains(var) {
                    inner.push(var.clone());
                    inner.sort();
                }
                stack.push((*body, inner));
            }
            Node::Choice { branches, .. } => {
                for b in branches.iter().rev() {
                    stack.push((b.cont, scope.clone()));
                }
            }
            Node::End => {}
        }
    }

    violations.sort_by_key(|v| (v.node, v.rule));
    WellFormednessReport { violations }
}
