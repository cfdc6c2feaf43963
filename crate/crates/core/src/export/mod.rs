//! Model-to-text extractors. Every exporter canonicalizes its input first,
//! so output depends only on model content, never on element order.

mod dot;
mod graphml;
mod kml;
mod viewjson;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use dot::to_dot;
pub use graphml::to_graphml;
pub use kml::to_kml;
pub use viewjson::to_view_json;

use crate::model::{CartographyModel, CoreKind, Element, MetaValue};
use crate::schema::MetamodelSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExporterId {
    GraphMl,
    Kml,
    Dot,
    ViewJson,
}

impl ExporterId {
    pub const ALL: [ExporterId; 4] = [ExporterId::GraphMl, ExporterId::Kml, ExporterId::Dot, ExporterId::ViewJson];

    pub fn from_name(name: &str) -> Option<ExporterId> {
        ExporterId::ALL.into_iter().find(|e| e.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            ExporterId::GraphMl => "graphml",
            ExporterId::Kml => "kml",
            ExporterId::Dot => "dot",
            ExporterId::ViewJson => "viewjson",
        }
    }

    /// Conventional file suffix, without the leading dot.
    pub fn extension(self) -> &'static str {
        match self {
            ExporterId::GraphMl => "graphml",
            ExporterId::Kml => "kml",
            ExporterId::Dot => "dot",
            ExporterId::ViewJson => "view.json",
        }
    }

    pub fn export(self, model: &CartographyModel, schema: &MetamodelSchema) -> String {
        match self {
            ExporterId::GraphMl => to_graphml(model, schema),
            ExporterId::Kml => to_kml(model, schema),
            ExporterId::Dot => to_dot(model, schema),
            ExporterId::ViewJson => to_view_json(model, schema),
        }
    }
}

impl fmt::Display for ExporterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A canonicalized model split into nodes and edges.
struct Graph {
    model: CartographyModel,
    kinds: Vec<Option<CoreKind>>,
    /// Element id -> semicolon-joined names of the groups listing it.
    groups: BTreeMap<String, String>,
    names: BTreeMap<String, String>,
}

impl Graph {
    fn new(model: &CartographyModel, schema: &MetamodelSchema) -> Graph {
        let model = model.clone().canonical();
        let kinds: Vec<Option<CoreKind>> = model
            .elements
            .iter()
            .map(|e| schema.core_kind_of(&e.type_name).ok())
            .collect();
        let mut groups: BTreeMap<String, String> = BTreeMap::new();
        for (e, k) in model.elements.iter().zip(&kinds) {
            if *k != Some(CoreKind::Group) {
                continue;
            }
            for m in &e.members {
                let entry = groups.entry(m.clone()).or_default();
                if !entry.is_empty() {
                    entry.push(';');
                }
                entry.push_str(&e.name);
            }
        }
        let names = model
            .elements
            .iter()
            .map(|e| (e.id.clone(), e.name.clone()))
            .collect();
        Graph {
            model,
            kinds,
            groups,
            names,
        }
    }

    fn is_edge(kind: Option<CoreKind>) -> bool {
        kind.is_some_and(CoreKind::is_relationship)
    }

    fn nodes(&self) -> impl Iterator<Item = (&Element, Option<CoreKind>)> {
        self.all().filter(|(_, k)| !Self::is_edge(*k))
    }

    fn edges(&self) -> impl Iterator<Item = (&Element, Option<CoreKind>)> {
        self.all().filter(|(_, k)| Self::is_edge(*k))
    }

    fn all(&self) -> impl Iterator<Item = (&Element, Option<CoreKind>)> {
        self.model.elements.iter().zip(self.kinds.iter().copied())
    }

    fn group_of(&self, id: &str) -> Option<&str> {
        self.groups.get(id).map(String::as_str)
    }

    fn container_name<'a>(&'a self, e: &'a Element) -> Option<&'a str> {
        e.container
            .as_deref()
            .map(|c| self.names.get(c).map_or(c, String::as_str))
    }
}

fn weight(e: &Element) -> Option<f64> {
    match e.metadata.get("weight") {
        Some(MetaValue::Num(w)) => Some(*w),
        _ => None,
    }
}

/// Number formatting shared by all exporters (shortest round-trip form).
fn num(n: f64) -> String {
    crate::json::json_num(n)
}

fn meta_text(v: &MetaValue) -> String {
    match v {
        MetaValue::Str(s) => s.clone(),
        MetaValue::Num(n) => num(*n),
        MetaValue::Bool(b) => if *b { "true" } else { "false" }.into(),
    }
}

/// Escapes text for XML content and attribute values. Characters XML 1.0
/// cannot represent are replaced by U+FFFD.
fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\t' | '\n' | '\r' => out.push(c),
            c if (c as u32) < 0x20 || c == '\u{FFFE}' || c == '\u{FFFF}' => out.push('\u{FFFD}'),
            c => out.push(c),
        }
    }
    out
}

const XML_DECL: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
