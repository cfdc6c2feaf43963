use alloc::string::String;
use core::fmt::Write;

use super::{num, weight, xml_escape, Graph, XML_DECL};
use crate::model::{CartographyModel, CoreKind};
use crate::schema::MetamodelSchema;

const KEYS: &[(&str, &str, &str, &str)] = &[
    ("name", "node", "name", "string"),
    ("type", "node", "type", "string"),
    ("group", "node", "group", "string"),
    ("container", "node", "container", "string"),
    ("weight", "node", "weight", "double"),
    ("edge_name", "edge", "name", "string"),
    ("edge_type", "edge", "type", "string"),
    ("edge_weight", "edge", "weight", "double"),
];

fn data(out: &mut String, key: &str, value: &str) {
    let _ = writeln!(out, "      <data key=\"{key}\">{}</data>", xml_escape(value));
}

/// GraphML 1.0: non-relationship elements become nodes, relationships
/// become edges (`directed="true"` for directed kinds).
pub fn to_graphml(model: &CartographyModel, schema: &MetamodelSchema) -> String {
    let g = Graph::new(model, schema);
    let mut out = String::from(XML_DECL);
    out.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns \
         http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    for (id, scope, name, ty) in KEYS {
        let _ = writeln!(
            out,
            "  <key id=\"{id}\" for=\"{scope}\" attr.name=\"{name}\" attr.type=\"{ty}\"/>"
        );
    }
    out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for (e, _) in g.nodes() {
        let _ = writeln!(out, "    <node id=\"{}\">", xml_escape(&e.id));
        data(&mut out, "name", &e.name);
        data(&mut out, "type", &e.type_name);
        if let Some(group) = g.group_of(&e.id) {
            data(&mut out, "group", group);
        }
        if let Some(c) = g.container_name(e) {
            data(&mut out, "container", c);
        }
        if let Some(w) = weight(e) {
            data(&mut out, "weight", &num(w));
        }
        out.push_str("    </node>\n");
    }
    for (e, kind) in g.edges() {
        let _ = writeln!(
            out,
            "    <edge id=\"{}\" source=\"{}\" target=\"{}\" directed=\"{}\">",
            xml_escape(&e.id),
            xml_escape(e.source.as_deref().unwrap_or_default()),
            xml_escape(e.target.as_deref().unwrap_or_default()),
            kind == Some(CoreKind::DirectedRelationship),
        );
        if !e.name.is_empty() {
            data(&mut out, "edge_name", &e.name);
        }
        data(&mut out, "edge_type", &e.type_name);
        if let Some(w) = weight(e) {
            data(&mut out, "edge_weight", &num(w));
        }
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}
