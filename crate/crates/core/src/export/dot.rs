use alloc::string::String;
use core::fmt::Write;

use super::Graph;
use crate::model::{CartographyModel, CoreKind};
use crate::schema::MetamodelSchema;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Graphviz `digraph`; undirected relationships carry `dir=none`.
pub fn to_dot(model: &CartographyModel, schema: &MetamodelSchema) -> String {
    let g = Graph::new(model, schema);
    let title = if g.model.schema_name.is_empty() { "Cartography" } else { &g.model.schema_name };
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(title));
    for (e, _) in g.nodes() {
        let _ = writeln!(
            out,
            "  {} [label={}, tooltip={}];",
            quote(&e.id),
            quote(&e.name),
            quote(&e.type_name)
        );
    }
    for (e, kind) in g.edges() {
        let _ = write!(
            out,
            "  {} -> {} [",
            quote(e.source.as_deref().unwrap_or_default()),
            quote(e.target.as_deref().unwrap_or_default())
        );
        if !e.name.is_empty() {
            let _ = write!(out, "label={}, ", quote(&e.name));
        }
        let _ = write!(out, "tooltip={}", quote(&e.type_name));
        if kind != Some(CoreKind::DirectedRelationship) {
            out.push_str(", dir=none");
        }
        out.push_str("];\n");
    }
    out.push_str("}\n");
    out
}
