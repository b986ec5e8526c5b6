//! Graphviz export of the pretableau and of the state graphs.

use std::fmt::Write;

use crate::formula::{ClosureIndex, FormulaBits};

use super::elimination::StateGraph;
use super::pretableau::{NodeKind, Pretableau};
use super::{NodeId, TableauRun};

/// Which graph of a run to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DotStage {
    Pretableau,
    Initial,
    Final,
}

impl DotStage {
    fn graph_name(self) -> &'static str {
        match self {
            DotStage::Pretableau => "pretableau",
            DotStage::Initial => "initial",
            DotStage::Final => "final",
        }
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

fn node_label(index: &ClosureIndex, id: NodeId, bits: &FormulaBits) -> String {
    escape(&format!("{id}: {{{}}}", index.render_bits(bits).join(", ")))
}

fn header(out: &mut String, stage: DotStage) {
    writeln!(out, "digraph {} {{", stage.graph_name()).unwrap();
    writeln!(out, "  node [shape=box, fontname=\"monospace\"];").unwrap();
}

fn node_line(
    out: &mut String,
    index: &ClosureIndex,
    id: NodeId,
    bits: &FormulaBits,
    kind: NodeKind,
) {
    let style = match kind {
        NodeKind::Prestate => "dashed",
        NodeKind::State => "solid",
    };
    writeln!(
        out,
        "  n{id} [style={style}, label=\"{}\"];",
        node_label(index, id, bits)
    )
    .unwrap();
}

fn marked_line(out: &mut String, index: &ClosureIndex, from: NodeId, label: usize, to: NodeId) {
    writeln!(
        out,
        "  n{from} -> n{to} [label=\"{}\"];",
        escape(index.rendered(label))
    )
    .unwrap();
}

impl Pretableau {
    /// Prestates as dashed boxes, states solid; double edges drawn double-lined
    /// and unlabeled, marked edges labeled with their `χ`.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        header(&mut out, DotStage::Pretableau);
        for id in self.nodes() {
            node_line(&mut out, self.index(), id, self.bits(id), self.kind(id));
        }
        for (gamma, delta) in self.double_edges() {
            writeln!(out, "  n{gamma} -> n{delta} [color=\"black:black\"];").unwrap();
        }
        for (delta, label, gamma) in self.marked_edges() {
            marked_line(&mut out, self.index(), delta, label, gamma);
        }
        out.push_str("}\n");
        out
    }
}

impl StateGraph {
    /// States as solid boxes, marked edges labeled with their `χ`.
    pub fn to_dot(&self, stage: DotStage) -> String {
        let mut out = String::new();
        header(&mut out, stage);
        for id in self.states() {
            node_line(&mut out, self.index(), id, self.bits(id), NodeKind::State);
        }
        for (from, label, to) in self.edges() {
            marked_line(&mut out, self.index(), from, label, to);
        }
        out.push_str("}\n");
        out
    }
}

impl TableauRun {
    pub fn to_dot(&self, stage: DotStage) -> String {
        match stage {
            DotStage::Pretableau => self.pretableau.to_dot(),
            DotStage::Initial => self.initial.to_dot(stage),
            DotStage::Final => self.final_tableau.to_dot(stage),
        }
    }
}
