use std::fmt::Write;

use super::{GlobalType, Node, NodeId};

pub(super) fn render(g: &GlobalType, id: NodeId, multiline: bool) -> String {
    let mut out = String::new();
    write_node(g, id, multiline, 0, &mut out);
    out
}

fn write_node(g: &GlobalType, id: NodeId, multiline: bool, indent: usize, out: &mut String) {
    match g.node(id) {
        Node::End => out.push('0'),
        Node::Var(v) => out.push_str(v.as_str()),
        Node::Rec { var, body } => {
            let _ = write!(out, "mu {var} . ");
            write_node(g, *body, multiline, indent, out);
        }
        Node::Choice { sender, branches } if branches.len() == 1 => {
            let b = &branches[0];
            let _ = write!(out, "{sender}->{}:{} . ", b.receiver, b.message);
            write_node(g, b.cont, multiline, indent, out);
        }
        Node::Choice { sender, branches } => {
            out.push_str("+ {");
            for (i, b) in branches.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if multiline {
                    out.push('\n');
                    push_indent(out, indent + 1);
                } else {
                    out.push(' ');
                }
                let _ = write!(out, "{sender}->{}:{} . ", b.receiver, b.message);
                write_node(g, b.cont, multiline, indent + 1, out);
            }
            if multiline {
                out.push('\n');
                push_indent(out, indent);
            } else {
                out.push(' ');
            }
            out.push('}');
        }
    }
}

fn push_indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}
